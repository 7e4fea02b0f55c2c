#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tango/augment.hpp"
#include "tango/config.hpp"
#include "tango/conditioning.hpp"
#include "tango/diffusion.hpp"
#include "tango/metrics.hpp"
#include "tango/schedule.hpp"
#include "tango/training.hpp"

namespace tango {

// Two-cluster conditional Gaussian: caption "low" <-> mean -offset in every
// coordinate, "high" <-> +offset, isotropic noise sigma.
struct ToyDatasetSpec {
  std::size_t pairs = 2000;
  double offset = 0.25;
  double sigma = 1.0;
  LatentShape shape{8, 2, 2};
  std::uint64_t seed = 0;
};

inline const std::vector<std::string> kToyCaptions = {"low", "high"};

struct ToyDataset {
  std::vector<ConditionedLatent> items;
  std::vector<int> labels;  // index into kToyCaptions
};

ToyVocabulary toy_vocabulary(std::size_t d_text, std::uint64_t seed);
ToyDataset make_toy_dataset(const ToyDatasetSpec& spec, const ToyVocabulary& vocab);

// 1 when the coordinate mean is positive ("high"), else 0.
int toy_cluster(const LatentTensor& z);

enum class SweepKind { kNone, kSteps, kGuidance };
SweepKind parse_sweep_kind(const std::string& text);

// Every knob of a run. Missing keys take the defaults below; to_config()
// writes all of them so hashes cover the effective values.
struct RunConfig {
  std::string model = "tiny";  // "tiny" or "analytic"
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  std::filesystem::path checkpoint;  // empty: <out>/checkpoint.bin

  int train_steps = 200;
  double beta_start = 5e-4;  // [1e-4, 0.02] scaled by 1000 / train_steps
  double beta_end = 0.1;
  GammaConfig gamma{GammaMode::kMinSnr, 5.0};

  std::vector<double> analytic_mean{1.0, -1.0, 2.0, 0.0};
  double analytic_sigma2 = 0.25;

  TinyDenoiserConfig denoiser;
  OptimizerConfig optimizer{OptimizerKind::kAdam, 3e-3, 0.9, 0.9, 0.999, 1e-8, 64, 60, 0};
  ToyDatasetSpec dataset;
  GuidanceConfig guidance{3.0, 0.10};

  int inference_steps = 100;
  std::size_t samples = 200;
  std::vector<double> sweep_steps{10, 20, 50, 100, 200};
  std::vector<double> sweep_guidance{1, 2.5, 3, 5, 10};

  std::size_t codec_r = 0;  // 0: no mel/WAV decoding of samples
  std::size_t decode_count = 4;
  int griffin_lim_iters = 32;

  std::filesystem::path manifest;
  std::size_t augment_count = 10;
  std::filesystem::path reference;
  std::filesystem::path generated;
  std::string slice = "all";
  std::size_t mel_bins = 64;
  std::size_t frame = 1024;
  std::size_t hop = 256;

  static RunConfig from_config(const KeyValueConfig& cfg);
  static RunConfig load(const std::filesystem::path& path);
  KeyValueConfig to_config() const;

  NoiseSchedule schedule() const;
  std::filesystem::path checkpoint_path() const;
  // Artifact fingerprint over every key except output locations.
  std::uint64_t hash() const;
  // Fingerprint over the keys that determine training, excluding the epoch
  // budget so a run can be resumed with more epochs.
  std::uint64_t training_hash() const;
};

struct TrainResult {
  TrainingTrace trace;
  std::filesystem::path checkpoint;
  std::filesystem::path trace_csv;
};

// Trains from scratch, or continues from <checkpoint> when resume is set.
TrainResult cmd_train(const RunConfig& cfg, bool resume = false);

struct SampleRow {
  int steps = 0;
  double guidance = 1.0;
  std::size_t count = 0;
  std::optional<double> accuracy;  // tiny model only
  double frechet = 0.0;            // to the data distribution
  double seconds = 0.0;            // wall time, excluded from the report
};

struct SampleResult {
  std::vector<SampleRow> rows;
  std::filesystem::path report;
};

SampleResult cmd_sample(const RunConfig& cfg, SweepKind sweep = SweepKind::kNone);

struct MixedPairSummary {
  std::filesystem::path wav;
  std::string caption;
  double p = 0.5;
  std::string source_a;
  std::string source_b;
};

struct AugmentResult {
  std::vector<MixedPairSummary> pairs;
  std::filesystem::path manifest;
  std::filesystem::path histogram;
};

AugmentResult cmd_augment(const RunConfig& cfg);

struct EvaluateRow {
  std::string slice;
  std::size_t count = 0;
  std::string metric;
  std::string embedder;
  std::optional<double> value;  // empty: slice too small
};

std::vector<EvaluateRow> cmd_evaluate(const RunConfig& cfg);

void cmd_schedule_dump(const RunConfig& cfg);

}  // namespace tango
