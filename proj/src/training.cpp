#include "tango/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tango/config.hpp"
#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw ParameterError("unknown optimizer: " + text);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam betas must lie in [0, 1)");
  }
  if (batch_size == 0) throw ParameterError("batch size must be >= 1");
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
}

Optimizer::Optimizer(const OptimizerConfig& config, std::span<const Tensor> params)
    : config_(config) {
  config_.validate();
  for (const auto& p : params) {
    shapes_.push_back(p.shape());
    first_.emplace_back(p.size(), 0.0);
    second_.emplace_back(config_.kind == OptimizerKind::kAdam ? p.size() : 0, 0.0);
  }
}

std::vector<Tensor> Optimizer::step(std::span<const Tensor> params,
                                    std::span<const Tensor> grads) {
  if (params.size() != shapes_.size() || grads.size() != shapes_.size()) {
    throw ContractError("optimizer: parameter count changed");
  }
  ++steps_;
  const double lr = config_.learning_rate;
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != shapes_[i] || grads[i].shape() != shapes_[i]) {
      throw ContractError("optimizer: parameter shape changed");
    }
    std::vector<double> p = params[i].values();
    const auto g = grads[i].data();
    auto& m = first_[i];
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = config_.momentum * m[k] + g[k];
        p[k] -= lr * m[k];
      }
    } else {
      auto& v = second_[i];
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
        p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
      }
    }
    out.emplace_back(shapes_[i], std::move(p));
  }
  return out;
}

void Optimizer::save(Checkpoint& ckpt) const {
  ckpt.metadata["optimizer.kind"] = to_string(config_.kind);
  ckpt.metadata["optimizer.steps"] = std::to_string(steps_);
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    ckpt.add("opt.m." + std::to_string(i), Tensor(shapes_[i], first_[i]));
    if (config_.kind == OptimizerKind::kAdam) {
      ckpt.add("opt.v." + std::to_string(i), Tensor(shapes_[i], second_[i]));
    }
  }
}

void Optimizer::load(const Checkpoint& ckpt) {
  auto kind = ckpt.metadata.find("optimizer.kind");
  if (kind == ckpt.metadata.end() || parse_optimizer_kind(kind->second) != config_.kind) {
    throw FormatError("checkpoint optimizer kind does not match");
  }
  steps_ = std::stoull(ckpt.metadata.at("optimizer.steps"));
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const auto& m = ckpt.get("opt.m." + std::to_string(i));
    if (m.shape() != shapes_[i]) throw FormatError("optimizer state shape mismatch");
    first_[i] = m.values();
    if (config_.kind == OptimizerKind::kAdam) {
      second_[i] = ckpt.get("opt.v." + std::to_string(i)).values();
    }
  }
}

std::size_t TrainingTrace::total_samples() const {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.samples;
  return n;
}

std::size_t TrainingTrace::total_dropped() const {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.dropped;
  return n;
}

double TrainingTrace::drop_fraction() const {
  const auto n = total_samples();
  return n == 0 ? 0.0 : static_cast<double>(total_dropped()) / static_cast<double>(n);
}

DenoiserTrainer::DenoiserTrainer(TinyCondDenoiser& model, NoiseSchedule schedule,
                                 GuidanceConfig guidance, OptimizerConfig optimizer)
    : model_(model),
      schedule_(std::move(schedule)),
      guidance_(guidance),
      config_(optimizer),
      optimizer_(optimizer, model.parameters()) {
  guidance_.validate();
}

EpochRecord DenoiserTrainer::run_epoch(std::span<const ConditionedLatent> data) {
  if (data.empty()) throw ParameterError("empty training dataset");
  const int epoch = epochs_done_ + 1;
  Rng rng(derive_seed(config_.seed, static_cast<std::uint64_t>(epoch)));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::uniform_int_distribution<int> step_dist(1, schedule_.steps());
  std::bernoulli_distribution drop_dist(guidance_.cond_drop_prob);
  const auto null = ConditioningSequence::null(model_.config().text_dim);
  const auto shape = model_.latent_shape();

  EpochRecord rec;
  rec.epoch = epoch;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const auto end = std::min(order.size(), start + config_.batch_size);
    std::vector<DiffusionExample> batch;
    batch.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) {
      const auto& item = data[order[k]];
      const int step = step_dist(rng);
      LatentTensor noise(shape, standard_normal(rng, shape.numel()));
      const bool drop = drop_dist(rng);
      rec.dropped += drop ? 1 : 0;
      batch.push_back({item.z0, drop ? null : item.cond, step, std::move(noise)});
    }
    std::vector<Tensor> grads;
    double loss = 0.0;
    try {
      ad::Tape tape;
      std::vector<ad::Var> vars;
      for (const auto& p : model_.parameters()) vars.push_back(tape.variable(p));
      auto out = training_loss(tape, schedule_, model_, vars, batch);
      loss = out.value().item();
      grads = tape.gradient(out, vars);
      model_.set_parameters(optimizer_.step(model_.parameters(), grads));
    } catch (const ContractError& e) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                          ", batch starting at " + std::to_string(start) + ": " +
                          e.what());
    }
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
    }
    loss_sum += loss * static_cast<double>(batch.size());
    rec.samples += batch.size();
  }
  rec.loss = loss_sum / static_cast<double>(rec.samples);
  epochs_done_ = epoch;
  return rec;
}

Checkpoint DenoiserTrainer::checkpoint(std::uint64_t config_hash) const {
  Checkpoint ckpt;
  ckpt.metadata["config_hash"] = hex64(config_hash);
  ckpt.metadata["epoch"] = std::to_string(epochs_done_);
  const auto& names = model_.parameter_names();
  const auto params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.add("param." + names[i], params[i]);
  optimizer_.save(ckpt);
  return ckpt;
}

void DenoiserTrainer::restore(const Checkpoint& ckpt, std::uint64_t expected_hash) {
  auto it = ckpt.metadata.find("config_hash");
  if (it == ckpt.metadata.end() || it->second != hex64(expected_hash)) {
    throw FormatError("checkpoint config hash " +
                      (it == ckpt.metadata.end() ? std::string("<none>") : it->second) +
                      " does not match " + hex64(expected_hash));
  }
  std::vector<Tensor> params;
  for (const auto& name : model_.parameter_names()) params.push_back(ckpt.get("param." + name));
  model_.set_parameters(std::move(params));
  optimizer_.load(ckpt);
  epochs_done_ = std::stoi(ckpt.metadata.at("epoch"));
}

TrainingTrace train(TinyCondDenoiser& model,
                    std::span<const ConditionedLatent> data,
                    const NoiseSchedule& schedule, const GuidanceConfig& guidance,
                    const OptimizerConfig& optimizer) {
  if (data.empty()) throw ParameterError("empty training dataset");
  DenoiserTrainer trainer(model, schedule, guidance, optimizer);
  TrainingTrace trace;
  for (int e = 0; e < optimizer.epochs; ++e) trace.epochs.push_back(trainer.run_epoch(data));
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# config=" << hex64(config_hash) << "\n";
  out << "epoch,loss,samples,dropped\n";
  for (const auto& e : trace.epochs) {
    out << e.epoch << ',' << format_double(e.loss) << ',' << e.samples << ','
        << e.dropped << '\n';
  }
}

}  // namespace tango
