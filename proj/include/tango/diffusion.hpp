#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tango/autodiff.hpp"
#include "tango/conditioning.hpp"
#include "tango/denoiser.hpp"
#include "tango/latent.hpp"
#include "tango/schedule.hpp"

namespace tango {

struct GuidanceConfig {
  double w = 1.0;               // guidance scale; 1 disables guidance
  double cond_drop_prob = 0.10; // training-time probability of the null tau

  void validate() const;
};

// z_n = sqrt(abar_n) z0 + sqrt(1 - abar_n) eps.
LatentTensor forward_sample(const NoiseSchedule& s, const LatentTensor& z0,
                            int step, const LatentTensor& eps);

// One training draw. `step` and `noise` are chosen by the caller.
struct DiffusionExample {
  LatentTensor z0;
  ConditioningSequence cond;
  int step = 1;
  LatentTensor noise;
};

// Mean over the batch of gamma_n * ||noise - eps_hat(z_n, tau)||^2.
double training_loss(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                     std::span<const DiffusionExample> batch);

// Same objective recorded on a tape, differentiable in `params`. Examples
// sharing a conditioning sequence are evaluated together.
ad::Var training_loss(ad::Tape& tape, const NoiseSchedule& s,
                      const DifferentiableEstimator& denoiser,
                      std::span<const ad::Var> params,
                      std::span<const DiffusionExample> batch);

// w * eps_cond + (1 - w) * eps_uncond. w == 1 and w == 0 return the
// corresponding operand unchanged.
LatentTensor cfg_combine(const LatentTensor& eps_cond,
                         const LatentTensor& eps_uncond, double w);

// Coefficients of one reverse transition. On the full schedule these are the
// per-step values; on a strided plan alpha is abar / abar_prev.
struct ReverseStep {
  int model_step = 1;  // step index the denoiser is queried at
  double alpha = 1.0;
  double alpha_bar = 1.0;
  double alpha_bar_prev = 1.0;
  double posterior_variance = 0.0;
};

ReverseStep reverse_coefficients(const NoiseSchedule& s, int step);

// `count` evenly strided steps ending at N, in descending order
// (step k of count maps to floor(k * N / count)).
std::vector<ReverseStep> sampling_plan(const NoiseSchedule& s, int count);

// mu = (z_n - (1 - alpha) / sqrt(1 - abar) * eps_hat) / sqrt(alpha), plus
// sqrt(posterior variance) * noise. eps_hat is the guided estimate.
LatentTensor reverse_step(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                          const LatentTensor& z_n, int step,
                          const ConditioningSequence& cond,
                          const GuidanceConfig& g, const LatentTensor& noise);

LatentTensor reverse_step(const ReverseStep& coeffs,
                          const NoiseEstimator& denoiser,
                          const LatentTensor& z_n,
                          const ConditioningSequence& cond,
                          const GuidanceConfig& g, const LatentTensor& noise);

// Posterior mean given an already-guided noise estimate.
LatentTensor posterior_mean(const ReverseStep& coeffs, const LatentTensor& z_n,
                            const LatentTensor& eps_hat);

// Ancestral sampling from z_N ~ N(0, I). Chain i of a batch uses seed
// derive_seed(seed, i); sample() is chain 0.
LatentTensor sample(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                    const ConditioningSequence& cond, const GuidanceConfig& g,
                    int steps, std::uint64_t seed);

std::vector<LatentTensor> sample_batch(const NoiseSchedule& s,
                                       const NoiseEstimator& denoiser,
                                       const ConditioningSequence& cond,
                                       const GuidanceConfig& g, int steps,
                                       std::uint64_t seed, std::size_t count);

}  // namespace tango
