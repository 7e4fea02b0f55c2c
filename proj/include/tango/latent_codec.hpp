#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tango/autodiff.hpp"
#include "tango/latent.hpp"
#include "tango/signal.hpp"
#include "tango/training.hpp"

namespace tango {

struct CodecConfig {
  std::size_t channels = 8;
  std::size_t r = 4;
  std::uint64_t seed = 0;

  // channels >= 1, r >= 1, r * r >= channels.
  void validate() const;
};

// Frozen linear codec. Every non-overlapping r x r mel patch (row-major, time
// then frequency) is projected onto C orthonormal directions in R^{r*r}.
class PatchCodec {
 public:
  explicit PatchCodec(const CodecConfig& config);

  const CodecConfig& config() const { return config_; }
  // C x r^2 with orthonormal rows.
  const Tensor& projection() const { return projection_; }

  LatentShape latent_shape(std::size_t frames, std::size_t bins) const;

  // mel is frames x bins; both divisible by r.
  LatentTensor encode(const Tensor& mel) const;
  LatentTensor encode(const MelSpectrogram& mel) const;

  // Exact adjoint of encode; may contain negative energies.
  Tensor decode_linear(const LatentTensor& z) const;
  // decode_linear with negative energies floored at 0.
  MelSpectrogram decode(const LatentTensor& z, std::size_t frame = 1024,
                        std::size_t hop = 256, double sample_rate = 16000.0) const;

 private:
  CodecConfig config_;
  Tensor projection_;
};

LatentTensor patch_encode(const MelSpectrogram& mel, const CodecConfig& config);
MelSpectrogram patch_decode(const LatentTensor& z, const CodecConfig& config);

// Patch vectors of a frames x bins mel as rows of a {patches, r*r} matrix, in
// the same order the codec uses.
Tensor mel_patches(const Tensor& mel, std::size_t r);

// Linear-Gaussian VAE over patch vectors of dimension `input_dim` with latent
// dimension `latent_dim`. Parameter order: w_mean, b_mean, w_logvar,
// b_logvar, w_dec, b_dec.
class LinearVae {
 public:
  LinearVae(std::size_t input_dim, std::size_t latent_dim, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }
  std::span<const Tensor> parameters() const { return params_; }
  void set_parameters(std::vector<Tensor> params);

  // Posterior mean and log-variance for a {B, input_dim} batch.
  std::pair<Tensor, Tensor> encode(const Tensor& x) const;
  Tensor decode(const Tensor& z) const;

 private:
  std::size_t input_dim_;
  std::size_t latent_dim_;
  std::vector<Tensor> params_;
};

struct ElboTerms {
  ad::Var loss;
  ad::Var reconstruction;
  ad::Var kl;
};

// Mean over the batch of ||x - dec(mean + exp(logvar/2) * eps)||^2
// + beta_kl * 0.5 * sum(mean^2 + exp(logvar) - logvar - 1).
// x is {B, input_dim}; eps is {B, latent_dim}.
ElboTerms vae_elbo(ad::Tape& tape, std::span<const ad::Var> params,
                   const Tensor& x, const Tensor& eps, double beta_kl = 1.0);

// Closed-form KL(N(mean, diag exp(logvar)) || N(0, I)) summed over entries.
double gaussian_kl(std::span<const double> mean, std::span<const double> logvar);

struct VaeTrainingResult {
  std::vector<double> losses;  // mean loss per epoch
};

// Minibatch training on the rows of x; eps drawn from derive_seed(seed, epoch).
VaeTrainingResult train_vae(LinearVae& vae, const Tensor& x, double beta_kl,
                            const OptimizerConfig& optimizer);

}  // namespace tango
