#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tango/autodiff.hpp"
#include "tango/conditioning.hpp"
#include "tango/latent.hpp"
#include "tango/schedule.hpp"

namespace tango {

// Noise estimator eps_hat(z_n, n, tau). Implementations must be pure and safe
// for concurrent read-only use.
class NoiseEstimator {
 public:
  virtual ~NoiseEstimator() = default;

  virtual LatentShape latent_shape() const = 0;

  virtual LatentTensor estimate(const LatentTensor& z, int step,
                                const ConditioningSequence& cond) const = 0;

  // All latents share one step and one conditioning sequence.
  virtual std::vector<LatentTensor> estimate_batch(
      std::span<const LatentTensor> z, int step,
      const ConditioningSequence& cond) const;
};

// An estimator whose output can be recorded on a tape as a function of its
// parameters.
class DifferentiableEstimator : public NoiseEstimator {
 public:
  virtual std::vector<Tensor> parameters() const = 0;

  // Estimates for B latents (each at its own step) under one conditioning
  // sequence, as a {B, latent numel} matrix in latent (channel-major) order.
  virtual ad::Var estimate_on_tape(ad::Tape& tape,
                                   std::span<const ad::Var> params,
                                   std::span<const LatentTensor> z,
                                   std::span<const int> steps,
                                   const ConditioningSequence& cond) const = 0;
};

// Exact posterior noise mean E[eps | z_n] when z_0 ~ N(mu*, sigma2 I):
//   sqrt(1 - abar) (z_n - sqrt(abar) mu*) / (abar sigma2 + 1 - abar).
// Ignores conditioning.
class AnalyticGaussianDenoiser : public NoiseEstimator {
 public:
  AnalyticGaussianDenoiser(NoiseSchedule schedule, LatentTensor mu_star,
                           double sigma2);

  LatentShape latent_shape() const override { return mu_.shape(); }
  LatentTensor estimate(const LatentTensor& z, int step,
                        const ConditioningSequence& cond) const override;

  const LatentTensor& mu_star() const { return mu_; }
  double sigma2() const { return sigma2_; }

 private:
  NoiseSchedule schedule_;
  LatentTensor mu_;
  double sigma2_;
};

struct TinyDenoiserConfig {
  LatentShape latent{8, 2, 2};
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t time_dim = 16;
  std::size_t text_dim = 16;
  std::size_t attn_dim = 16;
  std::uint64_t seed = 0;
  // Output projection starts at zero (network initially predicts 0).
  bool zero_output = false;

  void validate() const;
};

// Sinusoidal embedding of a step index: [sin(n f_k), cos(n f_k)] with
// f_k = 10000^(-k / (dim/2)).
std::vector<double> timestep_embedding(int step, std::size_t dim);

// Desk-scale conditional noise estimator. Each spatial position of the latent
// is a token of C channels; tokens are projected to the hidden width, shifted
// by a timestep embedding, pass through one single-head cross-attention block
// over the tau rows (residual), then `layers` tanh layers and an output
// projection back to C channels. The null sequence is replaced by a learned
// 1 x d_text row, so the unconditional path never reads tau.
class TinyCondDenoiser : public DifferentiableEstimator {
 public:
  explicit TinyCondDenoiser(const TinyDenoiserConfig& config);

  const TinyDenoiserConfig& config() const { return config_; }
  LatentShape latent_shape() const override { return config_.latent; }

  std::vector<Tensor> parameters() const override { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  void set_parameters(std::vector<Tensor> params);
  std::size_t parameter_count() const;

  LatentTensor estimate(const LatentTensor& z, int step,
                        const ConditioningSequence& cond) const override;
  std::vector<LatentTensor> estimate_batch(
      std::span<const LatentTensor> z, int step,
      const ConditioningSequence& cond) const override;

  ad::Var estimate_on_tape(ad::Tape& tape, std::span<const ad::Var> params,
                           std::span<const LatentTensor> z,
                           std::span<const int> steps,
                           const ConditioningSequence& cond) const override;

  // Attention weights (positions x tau rows) for a single latent.
  Tensor attention_weights(const LatentTensor& z, int step,
                           const ConditioningSequence& cond) const;

 private:
  struct Trace {
    ad::Var output;
    ad::Var attention;
  };
  Trace run(ad::Tape& tape, std::span<const ad::Var> params,
            std::span<const LatentTensor> z, std::span<const int> steps,
            const ConditioningSequence& cond) const;

  TinyDenoiserConfig config_;
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

}  // namespace tango
