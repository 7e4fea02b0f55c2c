#include "tango/denoiser.hpp"

#include <cmath>

#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

std::vector<LatentTensor> NoiseEstimator::estimate_batch(
    std::span<const LatentTensor> z, int step,
    const ConditioningSequence& cond) const {
  std::vector<LatentTensor> out;
  out.reserve(z.size());
  for (const auto& zi : z) out.push_back(estimate(zi, step, cond));
  return out;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(NoiseSchedule schedule,
                                                   LatentTensor mu_star,
                                                   double sigma2)
    : schedule_(std::move(schedule)), mu_(std::move(mu_star)), sigma2_(sigma2) {
  if (!(sigma2 > 0.0)) throw ParameterError("sigma2 must be > 0");
}

LatentTensor AnalyticGaussianDenoiser::estimate(
    const LatentTensor& z, int step, const ConditioningSequence&) const {
  require_same_shape(z, mu_, "analytic estimate");
  const double abar = schedule_.alpha_bar(step);
  const double gain = std::sqrt(1.0 - abar) / (abar * sigma2_ + 1.0 - abar);
  return axpby(gain, z, -gain * std::sqrt(abar), mu_);
}

void TinyDenoiserConfig::validate() const {
  if (latent.numel() == 0) throw ParameterError("latent shape must be nonempty");
  if (hidden == 0 || time_dim == 0 || text_dim == 0 || attn_dim == 0) {
    throw ParameterError("denoiser widths must be >= 1");
  }
  if (time_dim % 2 != 0) throw ParameterError("time_dim must be even");
}

std::vector<double> timestep_embedding(int step, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    out[k] = std::sin(step * freq);
    out[k + half] = std::cos(step * freq);
  }
  return out;
}

namespace {

enum Param : std::size_t {
  kWIn,
  kBIn,
  kWTime,
  kWQuery,
  kWKey,
  kWValue,
  kNullRow,
  kFirstHidden
};

Tensor init_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  auto v = standard_normal(rng, rows * cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (auto& x : v) x *= s;
  return Tensor({rows, cols}, std::move(v));
}

}  // namespace

TinyCondDenoiser::TinyCondDenoiser(const TinyDenoiserConfig& config)
    : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const auto C = config_.latent.channels;
  const auto h = config_.hidden;
  auto add = [&](std::string name, Tensor t) {
    names_.push_back(std::move(name));
    params_.push_back(std::move(t));
  };
  add("w_in", init_matrix(rng, C, h));
  add("b_in", Tensor::zeros({1, h}));
  add("w_time", init_matrix(rng, config_.time_dim, h));
  add("w_query", init_matrix(rng, h, config_.attn_dim));
  add("w_key", init_matrix(rng, config_.text_dim, config_.attn_dim));
  add("w_value", init_matrix(rng, config_.text_dim, h));
  add("null_row", init_matrix(rng, 1, config_.text_dim));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    add("w_hidden" + std::to_string(l), init_matrix(rng, h, h));
    add("b_hidden" + std::to_string(l), Tensor::zeros({1, h}));
  }
  if (config_.zero_output) {
    add("w_out", Tensor::zeros({h, C}));
  } else {
    add("w_out", init_matrix(rng, h, C));
  }
  add("b_out", Tensor::zeros({1, C}));
}

void TinyCondDenoiser::set_parameters(std::vector<Tensor> params) {
  if (params.size() != params_.size()) {
    throw ContractError("parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != params_[i].shape()) {
      throw ContractError("parameter '" + names_[i] + "' shape mismatch");
    }
  }
  params_ = std::move(params);
}

std::size_t TinyCondDenoiser::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

TinyCondDenoiser::Trace TinyCondDenoiser::run(
    ad::Tape& tape, std::span<const ad::Var> params,
    std::span<const LatentTensor> z, std::span<const int> steps,
    const ConditioningSequence& cond) const {
  if (params.size() != params_.size()) throw ContractError("parameter count mismatch");
  if (z.empty() || z.size() != steps.size()) {
    throw ContractError("need one step per latent");
  }
  if (!cond.is_null() && cond.d_text() != config_.text_dim) {
    throw ContractError("conditioning width does not match the denoiser");
  }
  const auto C = config_.latent.channels;
  const auto P = config_.latent.positions();
  const auto B = z.size();
  const auto e = config_.time_dim;

  std::vector<double> tokens(B * P * C);
  std::vector<double> temb(B * P * e);
  for (std::size_t b = 0; b < B; ++b) {
    if (z[b].shape() != config_.latent) {
      throw ContractError("latent shape " + z[b].shape().to_string() +
                          " differs from denoiser shape " +
                          config_.latent.to_string());
    }
    const auto emb = timestep_embedding(steps[b], e);
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c)
        tokens[(b * P + p) * C + c] = z[b][c * P + p];
      std::copy(emb.begin(), emb.end(), temb.begin() + static_cast<long>((b * P + p) * e));
    }
  }
  auto x = tape.constant(Tensor({B * P, C}, std::move(tokens)));
  auto t = tape.constant(Tensor({B * P, e}, std::move(temb)));

  auto hid = ad::matmul(x, params[kWIn]) + params[kBIn] +
             ad::matmul(t, params[kWTime]);

  auto tau = cond.is_null() ? params[kNullRow] : tape.constant(cond.tau());
  auto keys = ad::matmul(tau, params[kWKey]);
  auto values = ad::matmul(tau, params[kWValue]);
  auto query = ad::matmul(hid, params[kWQuery]);
  auto scores = ad::scale(ad::matmul(query, ad::transpose(keys)),
                          1.0 / std::sqrt(static_cast<double>(config_.attn_dim)));
  auto attn = ad::softmax_rows(scores);
  hid = hid + ad::matmul(attn, values);

  std::size_t k = kFirstHidden;
  for (std::size_t l = 0; l < config_.layers; ++l, k += 2) {
    hid = ad::tanh(ad::matmul(hid, params[k]) + params[k + 1]);
  }
  auto out = ad::matmul(hid, params[k]) + params[k + 1];

  // Back to channel-major latent order, one row per batch element.
  std::vector<std::size_t> index(B * P * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < P; ++p)
        index[b * P * C + c * P + p] = (b * P + p) * C + c;
  return {ad::gather(out, std::move(index), {B, P * C}), attn};
}

ad::Var TinyCondDenoiser::estimate_on_tape(ad::Tape& tape,
                                           std::span<const ad::Var> params,
                                           std::span<const LatentTensor> z,
                                           std::span<const int> steps,
                                           const ConditioningSequence& cond) const {
  return run(tape, params, z, steps, cond).output;
}

std::vector<LatentTensor> TinyCondDenoiser::estimate_batch(
    std::span<const LatentTensor> z, int step,
    const ConditioningSequence& cond) const {
  if (z.empty()) return {};
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& p : params_) vars.push_back(tape.constant(p));
  const std::vector<int> steps(z.size(), step);
  auto out = run(tape, vars, z, steps, cond).output;
  const auto D = config_.latent.numel();
  const auto data = out.value().data();
  std::vector<LatentTensor> result;
  result.reserve(z.size());
  for (std::size_t b = 0; b < z.size(); ++b) {
    result.emplace_back(config_.latent,
                        std::vector<double>(data.begin() + static_cast<long>(b * D),
                                            data.begin() + static_cast<long>((b + 1) * D)));
  }
  return result;
}

LatentTensor TinyCondDenoiser::estimate(const LatentTensor& z, int step,
                                        const ConditioningSequence& cond) const {
  return estimate_batch(std::span(&z, 1), step, cond).front();
}

Tensor TinyCondDenoiser::attention_weights(const LatentTensor& z, int step,
                                           const ConditioningSequence& cond) const {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& p : params_) vars.push_back(tape.constant(p));
  const int steps[] = {step};
  return run(tape, vars, std::span(&z, 1), steps, cond).attention.value();
}

}  // namespace tango
