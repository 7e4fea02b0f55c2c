#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tango/denoiser.hpp"
#include "tango/diffusion.hpp"
#include "tango/io.hpp"

namespace tango {

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 1e-2;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// First-order optimizer with its moment buffers. State round-trips through a
// Checkpoint so training can resume bit-exactly.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, std::span<const Tensor> params);

  std::vector<Tensor> step(std::span<const Tensor> params,
                           std::span<const Tensor> grads);

  std::uint64_t steps_taken() const { return steps_; }
  void save(Checkpoint& ckpt) const;
  void load(const Checkpoint& ckpt);

 private:
  OptimizerConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::vector<Shape> shapes_;
  std::uint64_t steps_ = 0;
};

struct ConditionedLatent {
  LatentTensor z0;
  ConditioningSequence cond;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::size_t samples = 0;
  std::size_t dropped = 0;  // samples whose tau was replaced by the null row
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;

  std::size_t total_samples() const;
  std::size_t total_dropped() const;
  double drop_fraction() const;
};

// Epoch-wise minimizer of the weighted noise-prediction loss. Each epoch is
// seeded by derive_seed(optimizer seed, epoch): shuffling, step indices,
// noise, and conditioning dropout all come from that stream.
class DenoiserTrainer {
 public:
  DenoiserTrainer(TinyCondDenoiser& model, NoiseSchedule schedule,
                  GuidanceConfig guidance, OptimizerConfig optimizer);

  EpochRecord run_epoch(std::span<const ConditionedLatent> data);
  int epochs_completed() const { return epochs_done_; }

  // Parameters, optimizer state and epoch counter, tagged with config_hash.
  Checkpoint checkpoint(std::uint64_t config_hash) const;
  // Throws FormatError when the stored hash differs from expected_hash.
  void restore(const Checkpoint& ckpt, std::uint64_t expected_hash);

 private:
  TinyCondDenoiser& model_;
  NoiseSchedule schedule_;
  GuidanceConfig guidance_;
  OptimizerConfig config_;
  Optimizer optimizer_;
  int epochs_done_ = 0;
};

// Runs optimizer.epochs epochs from scratch.
TrainingTrace train(TinyCondDenoiser& model,
                    std::span<const ConditionedLatent> data,
                    const NoiseSchedule& schedule, const GuidanceConfig& guidance,
                    const OptimizerConfig& optimizer);

// "epoch,loss,samples,dropped" with a leading "# config=<hash>" line.
void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace,
                     std::uint64_t config_hash);

}  // namespace tango
