#include "tango/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "tango/errors.hpp"
#include "tango/io.hpp"
#include "tango/latent_codec.hpp"
#include "tango/random.hpp"
#include "tango/wav.hpp"

namespace tango {

namespace {

// Child seed streams of RunConfig::seed.
enum SeedStream : std::uint64_t {
  kModelSeed = 1,
  kDataSeed = 2,
  kVocabSeed = 3,
  kOptimizerSeed = 4,
  kSampleSeed = 5,
  kAugmentSeed = 6,
  kMetricSeed = 7,
  kCodecSeed = 8,
};

const std::vector<std::string> kOutputKeys = {"out", "checkpoint"};

const std::vector<std::string> kTrainingKeys = {
    "seed", "train_steps", "beta_start", "beta_end", "gamma_mode", "gamma_clamp",
    "hidden", "layers", "time_dim", "text_dim", "attn_dim", "optimizer", "lr",
    "momentum", "beta1", "beta2", "epsilon", "batch_size", "cond_drop_prob",
    "dataset_pairs", "dataset_offset", "dataset_sigma", "latent_channels",
    "latent_height", "latent_width"};

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

std::size_t get_size(const KeyValueConfig& c, const std::string& key, std::size_t fallback) {
  const auto v = c.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ParameterError(key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::string config_line(std::uint64_t hash) { return "# config=" + hex64(hash) + "\n"; }

class WallTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

TinyDenoiserConfig model_config(const RunConfig& cfg) {
  auto m = cfg.denoiser;
  m.latent = cfg.dataset.shape;
  m.seed = derive_seed(cfg.seed, kModelSeed);
  return m;
}

ToyDatasetSpec dataset_spec(const RunConfig& cfg) {
  auto d = cfg.dataset;
  d.seed = derive_seed(cfg.seed, kDataSeed);
  return d;
}

OptimizerConfig optimizer_config(const RunConfig& cfg) {
  auto o = cfg.optimizer;
  o.seed = derive_seed(cfg.seed, kOptimizerSeed);
  return o;
}

void store_trace(Checkpoint& ckpt, const TrainingTrace& trace) {
  for (const auto& e : trace.epochs) {
    ckpt.metadata["trace." + std::to_string(e.epoch)] = format_double(e.loss) + "," +
                                                        std::to_string(e.samples) + "," +
                                                        std::to_string(e.dropped);
  }
}

TrainingTrace load_trace(const Checkpoint& ckpt, int epochs) {
  TrainingTrace trace;
  for (int e = 1; e <= epochs; ++e) {
    const auto it = ckpt.metadata.find("trace." + std::to_string(e));
    if (it == ckpt.metadata.end()) throw FormatError("checkpoint lacks trace for epoch " + std::to_string(e));
    EpochRecord r;
    r.epoch = e;
    std::istringstream in(it->second);
    std::string field;
    std::getline(in, field, ',');
    r.loss = std::stod(field);
    std::getline(in, field, ',');
    r.samples = std::stoull(field);
    std::getline(in, field, ',');
    r.dropped = std::stoull(field);
    trace.epochs.push_back(r);
  }
  return trace;
}

TinyCondDenoiser load_trained_model(const RunConfig& cfg) {
  const auto path = cfg.checkpoint_path();
  if (!std::filesystem::exists(path)) {
    throw ParameterError("no checkpoint at " + path.string() +
                         "; run `tango train` with the same config first");
  }
  const auto ckpt = load_checkpoint(path);
  const auto it = ckpt.metadata.find("config_hash");
  if (it == ckpt.metadata.end() || it->second != hex64(cfg.training_hash())) {
    throw FormatError("checkpoint " + path.string() + " was trained with config " +
                      (it == ckpt.metadata.end() ? std::string("<none>") : it->second) +
                      ", current training config is " + hex64(cfg.training_hash()));
  }
  TinyCondDenoiser model(model_config(cfg));
  std::vector<Tensor> params;
  for (const auto& name : model.parameter_names()) params.push_back(ckpt.get("param." + name));
  model.set_parameters(std::move(params));
  return model;
}

GaussianStats isotropic_stats(std::vector<double> mean, double variance) {
  const std::size_t d = mean.size();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = variance;
  return {std::move(mean), Tensor({d, d}, std::move(cov)), 0};
}

double frechet_to(const std::vector<LatentTensor>& samples, const GaussianStats& truth) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& z : samples) rows.emplace_back(z.values().begin(), z.values().end());
  return frechet_distance(fit_gaussian(rows), truth);
}

void decode_samples(const RunConfig& cfg, const std::vector<LatentTensor>& latents,
                    const std::string& prefix) {
  if (cfg.codec_r == 0) return;
  const PatchCodec codec({latents.front().shape().channels, cfg.codec_r,
                          derive_seed(cfg.seed, kCodecSeed)});
  const std::size_t n = std::min(cfg.decode_count, latents.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto mel = codec.decode(latents[i], cfg.frame, cfg.hop);
    const auto name = prefix + "_" + std::to_string(i);
    auto out = open_out(cfg.out / (name + "_mel.csv"));
    out << config_line(cfg.hash());
    for (std::size_t t = 0; t < mel.frames(); ++t) {
      for (std::size_t f = 0; f < mel.bins(); ++f)
        out << (f ? "," : "") << format_double(mel.energies[t * mel.bins() + f]);
      out << "\n";
    }
    const auto audio = griffin_lim(mel, cfg.griffin_lim_iters, derive_seed(cfg.seed, kCodecSeed + i));
    const auto clipped = write_wav(cfg.out / (name + ".wav"), audio);
    if (clipped > 0) std::cerr << "warning: " << clipped << " samples clipped in " << name << ".wav\n";
  }
}

std::string csv_value(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("N/A");
}

}  // namespace

ToyVocabulary toy_vocabulary(std::size_t d_text, std::uint64_t seed) {
  return ToyVocabulary::from_captions(kToyCaptions, d_text, seed);
}

ToyDataset make_toy_dataset(const ToyDatasetSpec& spec, const ToyVocabulary& vocab) {
  if (spec.pairs < 2) throw ParameterError("toy dataset needs at least 2 pairs");
  if (!(spec.sigma > 0.0)) throw ParameterError("toy dataset sigma must be > 0");
  Rng rng(spec.seed);
  const std::size_t d = spec.shape.numel();
  const ConditioningSequence conds[2] = {vocab.encode(kToyCaptions[0]),
                                         vocab.encode(kToyCaptions[1])};
  ToyDataset ds;
  for (std::size_t i = 0; i < spec.pairs; ++i) {
    const int label = static_cast<int>(i % 2);
    auto v = standard_normal(rng, d);
    const double centre = label == 0 ? -spec.offset : spec.offset;
    for (auto& x : v) x = centre + spec.sigma * x;
    ds.items.push_back({LatentTensor(spec.shape, std::move(v)), conds[label]});
    ds.labels.push_back(label);
  }
  return ds;
}

int toy_cluster(const LatentTensor& z) {
  double total = 0.0;
  for (double x : z.values()) total += x;
  return total > 0.0 ? 1 : 0;
}

SweepKind parse_sweep_kind(const std::string& text) {
  if (text == "none" || text.empty()) return SweepKind::kNone;
  if (text == "steps") return SweepKind::kSteps;
  if (text == "guidance") return SweepKind::kGuidance;
  throw ParameterError("unknown sweep '" + text + "' (expected none, steps or guidance)");
}

RunConfig RunConfig::from_config(const KeyValueConfig& c) {
  RunConfig r;
  r.model = c.get_string("model", r.model);
  if (r.model != "tiny" && r.model != "analytic") {
    throw ParameterError("model must be 'tiny' or 'analytic', got '" + r.model + "'");
  }
  r.seed = c.get_u64("seed", r.seed);
  r.out = c.get_string("out", r.out.string());
  r.checkpoint = c.get_string("checkpoint", r.checkpoint.string());

  r.train_steps = static_cast<int>(c.get_int("train_steps", r.train_steps));
  if (r.train_steps < 1) throw ParameterError("train_steps must be >= 1");
  const double k = 1000.0 / r.train_steps;
  r.beta_start = c.get_double("beta_start", std::min(1e-4 * k, 0.999));
  r.beta_end = c.get_double("beta_end", std::min(0.02 * k, 0.999));
  r.gamma.mode = parse_gamma_mode(c.get_string("gamma_mode", to_string(r.gamma.mode)));
  r.gamma.clamp = c.get_double("gamma_clamp", r.gamma.clamp);

  r.analytic_mean = c.get_doubles("analytic_mean", r.analytic_mean);
  r.analytic_sigma2 = c.get_double("analytic_sigma2", r.analytic_sigma2);

  r.denoiser.hidden = get_size(c, "hidden", r.denoiser.hidden);
  r.denoiser.layers = get_size(c, "layers", r.denoiser.layers);
  r.denoiser.time_dim = get_size(c, "time_dim", r.denoiser.time_dim);
  r.denoiser.text_dim = get_size(c, "text_dim", r.denoiser.text_dim);
  r.denoiser.attn_dim = get_size(c, "attn_dim", r.denoiser.attn_dim);

  r.optimizer.kind = parse_optimizer_kind(c.get_string("optimizer", to_string(r.optimizer.kind)));
  r.optimizer.learning_rate = c.get_double("lr", r.optimizer.learning_rate);
  r.optimizer.momentum = c.get_double("momentum", r.optimizer.momentum);
  r.optimizer.beta1 = c.get_double("beta1", r.optimizer.beta1);
  r.optimizer.beta2 = c.get_double("beta2", r.optimizer.beta2);
  r.optimizer.epsilon = c.get_double("epsilon", r.optimizer.epsilon);
  r.optimizer.batch_size = get_size(c, "batch_size", r.optimizer.batch_size);
  r.optimizer.epochs = static_cast<int>(c.get_int("epochs", r.optimizer.epochs));

  r.dataset.pairs = get_size(c, "dataset_pairs", r.dataset.pairs);
  r.dataset.offset = c.get_double("dataset_offset", r.dataset.offset);
  r.dataset.sigma = c.get_double("dataset_sigma", r.dataset.sigma);
  r.dataset.shape.channels = get_size(c, "latent_channels", r.dataset.shape.channels);
  r.dataset.shape.height = get_size(c, "latent_height", r.dataset.shape.height);
  r.dataset.shape.width = get_size(c, "latent_width", r.dataset.shape.width);

  r.guidance.w = c.get_double("guidance", r.guidance.w);
  r.guidance.cond_drop_prob = c.get_double("cond_drop_prob", r.guidance.cond_drop_prob);

  r.inference_steps = static_cast<int>(c.get_int("inference_steps", r.inference_steps));
  r.samples = get_size(c, "samples", r.samples);
  r.sweep_steps = c.get_doubles("sweep_steps", r.sweep_steps);
  r.sweep_guidance = c.get_doubles("sweep_guidance", r.sweep_guidance);

  r.codec_r = get_size(c, "codec_r", r.codec_r);
  r.decode_count = get_size(c, "decode_count", r.decode_count);
  r.griffin_lim_iters = static_cast<int>(c.get_int("griffin_lim_iters", r.griffin_lim_iters));

  r.manifest = c.get_string("manifest", r.manifest.string());
  r.augment_count = get_size(c, "augment_count", r.augment_count);
  r.reference = c.get_string("reference", r.reference.string());
  r.generated = c.get_string("generated", r.generated.string());
  r.slice = c.get_string("slice", r.slice);
  r.mel_bins = get_size(c, "mel_bins", r.mel_bins);
  r.frame = get_size(c, "frame", r.frame);
  r.hop = get_size(c, "hop", r.hop);

  r.guidance.validate();
  r.optimizer.validate();
  if (r.inference_steps < 1) throw ParameterError("inference_steps must be >= 1");
  if (r.samples < 2) throw ParameterError("samples must be >= 2");
  return r;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

KeyValueConfig RunConfig::to_config() const {
  KeyValueConfig c;
  auto i64 = [](auto v) { return static_cast<std::int64_t>(v); };
  c.set("model", model);
  c.set("seed", std::to_string(seed));
  c.set("out", out.string());
  c.set("checkpoint", checkpoint.string());
  c.set("train_steps", i64(train_steps));
  c.set("beta_start", beta_start);
  c.set("beta_end", beta_end);
  c.set("gamma_mode", to_string(gamma.mode));
  c.set("gamma_clamp", gamma.clamp);
  c.set("analytic_mean", join_doubles(analytic_mean));
  c.set("analytic_sigma2", analytic_sigma2);
  c.set("hidden", i64(denoiser.hidden));
  c.set("layers", i64(denoiser.layers));
  c.set("time_dim", i64(denoiser.time_dim));
  c.set("text_dim", i64(denoiser.text_dim));
  c.set("attn_dim", i64(denoiser.attn_dim));
  c.set("optimizer", to_string(optimizer.kind));
  c.set("lr", optimizer.learning_rate);
  c.set("momentum", optimizer.momentum);
  c.set("beta1", optimizer.beta1);
  c.set("beta2", optimizer.beta2);
  c.set("epsilon", optimizer.epsilon);
  c.set("batch_size", i64(optimizer.batch_size));
  c.set("epochs", i64(optimizer.epochs));
  c.set("dataset_pairs", i64(dataset.pairs));
  c.set("dataset_offset", dataset.offset);
  c.set("dataset_sigma", dataset.sigma);
  c.set("latent_channels", i64(dataset.shape.channels));
  c.set("latent_height", i64(dataset.shape.height));
  c.set("latent_width", i64(dataset.shape.width));
  c.set("guidance", guidance.w);
  c.set("cond_drop_prob", guidance.cond_drop_prob);
  c.set("inference_steps", i64(inference_steps));
  c.set("samples", i64(samples));
  c.set("sweep_steps", join_doubles(sweep_steps));
  c.set("sweep_guidance", join_doubles(sweep_guidance));
  c.set("codec_r", i64(codec_r));
  c.set("decode_count", i64(decode_count));
  c.set("griffin_lim_iters", i64(griffin_lim_iters));
  c.set("manifest", manifest.string());
  c.set("augment_count", i64(augment_count));
  c.set("reference", reference.string());
  c.set("generated", generated.string());
  c.set("slice", slice);
  c.set("mel_bins", i64(mel_bins));
  c.set("frame", i64(frame));
  c.set("hop", i64(hop));
  return c;
}

NoiseSchedule RunConfig::schedule() const {
  return NoiseSchedule::linear(train_steps, beta_start, beta_end, gamma);
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? out / "checkpoint.bin" : checkpoint;
}

std::uint64_t RunConfig::hash() const { return to_config().hash(kOutputKeys); }

std::uint64_t RunConfig::training_hash() const {
  const auto full = to_config();
  KeyValueConfig sub;
  for (const auto& key : kTrainingKeys) sub.set(key, *full.find(key));
  return sub.hash();
}

TrainResult cmd_train(const RunConfig& cfg, bool resume) {
  if (cfg.model != "tiny") throw ParameterError("train requires model = tiny");
  const WallTimer timer;
  const auto vocab = toy_vocabulary(cfg.denoiser.text_dim, derive_seed(cfg.seed, kVocabSeed));
  const auto data = make_toy_dataset(dataset_spec(cfg), vocab);
  TinyCondDenoiser model(model_config(cfg));
  DenoiserTrainer trainer(model, cfg.schedule(), cfg.guidance, optimizer_config(cfg));

  TrainResult result;
  result.checkpoint = cfg.checkpoint_path();
  result.trace_csv = cfg.out / "trace.csv";
  if (resume) {
    const auto ckpt = load_checkpoint(result.checkpoint);
    trainer.restore(ckpt, cfg.training_hash());
    result.trace = load_trace(ckpt, trainer.epochs_completed());
  }
  while (trainer.epochs_completed() < cfg.optimizer.epochs) {
    result.trace.epochs.push_back(trainer.run_epoch(data.items));
  }
  auto ckpt = trainer.checkpoint(cfg.training_hash());
  store_trace(ckpt, result.trace);
  if (result.checkpoint.has_parent_path()) std::filesystem::create_directories(result.checkpoint.parent_path());
  save_checkpoint(result.checkpoint, ckpt);
  std::filesystem::create_directories(cfg.out);
  write_trace_csv(result.trace_csv, result.trace, cfg.hash());
  open_out(cfg.out / "train.log") << "train_seconds=" << timer.seconds() << "\n";
  return result;
}

SampleResult cmd_sample(const RunConfig& cfg, SweepKind sweep) {
  std::vector<std::pair<int, double>> settings;
  switch (sweep) {
    case SweepKind::kNone:
      settings.emplace_back(cfg.inference_steps, cfg.guidance.w);
      break;
    case SweepKind::kSteps:
      for (double s : cfg.sweep_steps) settings.emplace_back(static_cast<int>(s), cfg.guidance.w);
      break;
    case SweepKind::kGuidance:
      for (double w : cfg.sweep_guidance) settings.emplace_back(cfg.inference_steps, w);
      break;
  }
  const auto schedule = cfg.schedule();
  const std::uint64_t sample_seed = derive_seed(cfg.seed, kSampleSeed);

  SampleResult result;
  LatentDump dump;
  dump.seed = sample_seed;
  dump.schedule_hash = schedule.fingerprint();
  dump.config_hash = cfg.hash();

  if (cfg.model == "analytic") {
    const LatentShape shape{cfg.analytic_mean.size(), 1, 1};
    const LatentTensor mu(shape, cfg.analytic_mean);
    const AnalyticGaussianDenoiser oracle(schedule, mu, cfg.analytic_sigma2);
    const auto truth = isotropic_stats(cfg.analytic_mean, cfg.analytic_sigma2);
    const auto null = ConditioningSequence::null(1);
    dump.shape = shape;
    for (auto [steps, w] : settings) {
      const WallTimer timer;
      auto z = sample_batch(schedule, oracle, null, {w, cfg.guidance.cond_drop_prob}, steps,
                            sample_seed, cfg.samples);
      result.rows.push_back({steps, w, z.size(), std::nullopt, frechet_to(z, truth), timer.seconds()});
      if (sweep == SweepKind::kNone) dump.latents = std::move(z);
    }
  } else {
    const auto model = load_trained_model(cfg);
    const auto vocab = toy_vocabulary(cfg.denoiser.text_dim, derive_seed(cfg.seed, kVocabSeed));
    dump.shape = cfg.dataset.shape;
    const std::size_t d = cfg.dataset.shape.numel();
    for (auto [steps, w] : settings) {
      const WallTimer timer;
      std::size_t correct = 0, total = 0;
      double frechet = 0.0;
      std::vector<LatentTensor> all;
      for (int label = 0; label < 2; ++label) {
        auto z = sample_batch(schedule, model, vocab.encode(kToyCaptions[label]),
                              {w, cfg.guidance.cond_drop_prob}, steps,
                              derive_seed(sample_seed, static_cast<std::uint64_t>(label)),
                              cfg.samples);
        for (const auto& s : z) correct += toy_cluster(s) == label;
        total += z.size();
        const double centre = label == 0 ? -cfg.dataset.offset : cfg.dataset.offset;
        frechet += 0.5 * frechet_to(z, isotropic_stats(std::vector<double>(d, centre),
                                                       cfg.dataset.sigma * cfg.dataset.sigma));
        all.insert(all.end(), z.begin(), z.end());
      }
      result.rows.push_back({steps, w, total,
                             static_cast<double>(correct) / static_cast<double>(total),
                             frechet, timer.seconds()});
      if (sweep == SweepKind::kNone) dump.latents = std::move(all);
    }
  }

  std::filesystem::create_directories(cfg.out);
  const std::string stem = sweep == SweepKind::kNone ? "sample"
                           : sweep == SweepKind::kSteps ? "sweep_steps"
                                                        : "sweep_guidance";
  result.report = cfg.out / (stem + "_report.csv");
  {
    auto out = open_out(result.report);
    out << config_line(cfg.hash()) << "steps,guidance,count,accuracy,frechet\n";
    for (const auto& r : result.rows) {
      out << r.steps << ',' << format_double(r.guidance) << ',' << r.count << ','
          << csv_value(r.accuracy) << ',' << format_double(r.frechet) << '\n';
    }
  }
  {
    auto log = open_out(cfg.out / (stem + ".log"));
    for (const auto& r : result.rows) {
      log << "steps=" << r.steps << " guidance=" << format_double(r.guidance)
          << " seconds=" << r.seconds << "\n";
    }
  }
  if (!dump.latents.empty()) {
    save_latents(cfg.out / "latents.bin", dump);
    save_latents_csv(cfg.out / "latents.csv", dump);
    decode_samples(cfg, dump.latents, "sample");
  }
  return result;
}

AugmentResult cmd_augment(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw ParameterError("augment requires manifest = <path>");
  const auto entries = read_manifest(cfg.manifest);
  const auto mixed = augment_manifest(entries, cfg.augment_count, derive_seed(cfg.seed, kAugmentSeed));

  std::filesystem::create_directories(cfg.out);
  AugmentResult result;
  result.manifest = cfg.out / "augmented.tsv";
  result.histogram = cfg.out / "p_histogram.csv";
  std::vector<double> ps;
  std::size_t clipped = 0;
  {
    auto out = open_out(result.manifest);
    out << config_line(cfg.hash());
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      std::ostringstream name;
      name << "mix_" << std::setw(5) << std::setfill('0') << i << ".wav";
      const auto& m = mixed[i];
      clipped += write_wav(cfg.out / name.str(), m.audio);
      out << name.str() << '\t' << m.caption << "\tp=" << format_double(m.p)
          << " src=" << m.source_a << ',' << m.source_b << '\n';
      result.pairs.push_back({cfg.out / name.str(), m.caption, m.p, m.source_a, m.source_b});
      ps.push_back(m.p);
    }
  }
  const auto counts = weight_histogram(ps, 20);
  {
    auto out = open_out(result.histogram);
    out << config_line(cfg.hash()) << "bin_low,bin_high,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b) {
      out << format_double(static_cast<double>(b) / 20.0) << ','
          << format_double(static_cast<double>(b + 1) / 20.0) << ',' << counts[b] << '\n';
    }
  }
  if (clipped > 0) std::cerr << "warning: " << clipped << " mixed samples clipped at WAV write\n";
  return result;
}

std::vector<EvaluateRow> cmd_evaluate(const RunConfig& cfg) {
  if (cfg.reference.empty() || cfg.generated.empty()) {
    throw ParameterError("evaluate requires reference = <manifest> and generated = <manifest>");
  }
  const auto ref_entries = read_manifest(cfg.reference);
  const auto gen_entries = read_manifest(cfg.generated);
  if (ref_entries.size() != gen_entries.size()) {
    throw ParameterError("reference has " + std::to_string(ref_entries.size()) +
                         " entries but generated has " + std::to_string(gen_entries.size()));
  }
  auto to_mel = [&](const ManifestEntry& e) {
    return mel_spectrogram(read_wav(e.path), cfg.mel_bins, cfg.frame, cfg.hop);
  };
  std::vector<MelSpectrogram> ref, gen;
  for (std::size_t i = 0; i < ref_entries.size(); ++i) {
    ref.push_back(to_mel(ref_entries[i]));
    gen.push_back(to_mel(gen_entries[i]));
  }

  // Slice name -> member indices; std::map keeps report order stable.
  std::map<std::string, std::vector<std::size_t>> slices;
  if (cfg.slice == "all") {
    auto& all = slices["all"];
    for (std::size_t i = 0; i < ref.size(); ++i) all.push_back(i);
  } else if (cfg.slice == "temporal") {
    slices[to_string(EventStructure::kMultipleEvents)];
    slices[to_string(EventStructure::kSingleEvent)];
    for (std::size_t i = 0; i < ref.size(); ++i)
      slices[to_string(classify_temporal(ref_entries[i].caption))].push_back(i);
  } else if (cfg.slice == "caption") {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      std::string key;
      for (const auto& w : normalize_caption(ref_entries[i].caption)) key += (key.empty() ? "" : " ") + w;
      slices[key.empty() ? "<empty>" : key].push_back(i);
    }
  } else {
    throw ParameterError("slice must be all, temporal or caption; got '" + cfg.slice + "'");
  }

  const std::uint64_t metric_seed = derive_seed(cfg.seed, kMetricSeed);
  const MelStatsEmbedder stats(cfg.mel_bins);
  const RandomProjectionEmbedder proj(cfg.mel_bins, 32, metric_seed);
  const RandomLinearClassifier classifier(cfg.mel_bins, 10, metric_seed);
  const Embedder* embedders[] = {&stats, &proj};

  std::vector<EvaluateRow> rows;
  for (const auto& [name, idx] : slices) {
    std::vector<MelSpectrogram> r, g;
    for (auto i : idx) {
      r.push_back(ref[i]);
      g.push_back(gen[i]);
    }
    if (idx.size() >= 2) {
      for (const auto& m : evaluate_suite(r, g, embedders, classifier))
        rows.push_back({name, idx.size(), m.metric, m.embedder, m.value});
    } else {
      for (const Embedder* e : embedders) rows.push_back({name, idx.size(), "frechet", e->name(), std::nullopt});
      rows.push_back({name, idx.size(), "kl", "classifier",
                      idx.empty() ? std::nullopt : std::optional<double>(label_kl(r, g, classifier))});
    }
  }

  std::filesystem::create_directories(cfg.out);
  auto out = open_out(cfg.out / "evaluate_report.csv");
  out << config_line(cfg.hash()) << "slice,count,metric,embedder,value\n";
  for (const auto& r : rows) {
    out << r.slice << ',' << r.count << ',' << r.metric << ',' << r.embedder << ','
        << csv_value(r.value) << '\n';
  }
  return rows;
}

void cmd_schedule_dump(const RunConfig& cfg) {
  const auto s = cfg.schedule();
  std::filesystem::create_directories(cfg.out);
  auto out = open_out(cfg.out / "schedule.csv");
  out << config_line(cfg.hash()) << "n,beta,alpha,alpha_bar,posterior_variance,snr,gamma\n";
  for (int n = 1; n <= s.steps(); ++n) {
    out << n << ',' << format_double(s.beta(n)) << ',' << format_double(s.alpha(n)) << ','
        << format_double(s.alpha_bar(n)) << ',' << format_double(s.posterior_variance(n))
        << ',' << format_double(s.snr(n)) << ',' << format_double(s.gamma(n)) << '\n';
  }
}

}  // namespace tango
