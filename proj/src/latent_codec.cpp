#include "tango/latent_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

void CodecConfig::validate() const {
  if (channels < 1) throw ParameterError("codec channels must be >= 1");
  if (r < 1) throw ParameterError("codec compression level r must be >= 1");
  if (r * r < channels) {
    throw ParameterError("codec needs r*r >= channels (r=" + std::to_string(r) +
                         ", channels=" + std::to_string(channels) + ")");
  }
}

namespace {

// Modified Gram-Schmidt, two passes.
Tensor orthonormal_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> m = standard_normal(rng, rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = m.data() + i * cols;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* prev = m.data() + j * cols;
        const double d = std::inner_product(row, row + cols, prev, 0.0);
        for (std::size_t k = 0; k < cols; ++k) row[k] -= d * prev[k];
      }
    }
    const double n = std::sqrt(std::inner_product(row, row + cols, row, 0.0));
    if (n < 1e-8) throw ParameterError("degenerate codec projection draw");
    for (std::size_t k = 0; k < cols; ++k) row[k] /= n;
  }
  return Tensor({rows, cols}, std::move(m));
}

void check_mel(const Tensor& mel, std::size_t r) {
  if (mel.rank() != 2) throw ContractError("mel must be frames x bins");
  if (mel.dim(0) % r != 0 || mel.dim(1) % r != 0 || mel.dim(0) == 0 || mel.dim(1) == 0) {
    throw ParameterError("mel shape " + shape_to_string(mel.shape()) +
                         " not divisible by r=" + std::to_string(r));
  }
}

}  // namespace

PatchCodec::PatchCodec(const CodecConfig& config) : config_(config) {
  config_.validate();
  projection_ = orthonormal_rows(config_.channels, config_.r * config_.r,
                                 derive_seed(config_.seed, 0x636f646563ULL));
}

LatentShape PatchCodec::latent_shape(std::size_t frames, std::size_t bins) const {
  return {config_.channels, frames / config_.r, bins / config_.r};
}

Tensor mel_patches(const Tensor& mel, std::size_t r) {
  check_mel(mel, r);
  const std::size_t T = mel.dim(0), F = mel.dim(1);
  const std::size_t H = T / r, W = F / r, P = r * r;
  std::vector<double> out(H * W * P);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j)
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b)
          out[(i * W + j) * P + a * r + b] = mel[(i * r + a) * F + j * r + b];
  return Tensor({H * W, P}, std::move(out));
}

LatentTensor PatchCodec::encode(const Tensor& mel) const {
  const std::size_t r = config_.r, C = config_.channels;
  const auto patches = mel_patches(mel, r);  // {H*W, r^2}
  const auto shape = latent_shape(mel.dim(0), mel.dim(1));
  const auto coded = matmul(patches, transpose(projection_));  // {H*W, C}
  const std::size_t HW = shape.positions();
  std::vector<double> z(C * HW);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) z[c * HW + p] = coded[p * C + c];
  return LatentTensor(shape, std::move(z));
}

LatentTensor PatchCodec::encode(const MelSpectrogram& mel) const {
  return encode(mel.energies);
}

Tensor PatchCodec::decode_linear(const LatentTensor& z) const {
  const std::size_t r = config_.r, C = config_.channels, P = r * r;
  const auto& s = z.shape();
  if (s.channels != C || s.height == 0 || s.width == 0) {
    throw ContractError("latent " + s.to_string() + " does not match codec channels " +
                        std::to_string(C));
  }
  const std::size_t H = s.height, W = s.width, HW = s.positions();
  const std::size_t F = W * r;
  std::vector<double> mel(H * r * F, 0.0);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t p = i * W + j;
      for (std::size_t k = 0; k < P; ++k) {
        double v = 0.0;
        for (std::size_t c = 0; c < C; ++c) v += projection_[c * P + k] * z[c * HW + p];
        mel[(i * r + k / r) * F + j * r + k % r] = v;
      }
    }
  return Tensor({H * r, F}, std::move(mel));
}

MelSpectrogram PatchCodec::decode(const LatentTensor& z, std::size_t frame,
                                  std::size_t hop, double sample_rate) const {
  const auto lin = decode_linear(z);
  std::vector<double> e(lin.values());
  for (auto& v : e) v = std::max(v, 0.0);
  return MelSpectrogram{Tensor(lin.shape(), std::move(e)), frame, hop, sample_rate};
}

LatentTensor patch_encode(const MelSpectrogram& mel, const CodecConfig& config) {
  return PatchCodec(config).encode(mel);
}

MelSpectrogram patch_decode(const LatentTensor& z, const CodecConfig& config) {
  return PatchCodec(config).decode(z);
}

LinearVae::LinearVae(std::size_t input_dim, std::size_t latent_dim, std::uint64_t seed)
    : input_dim_(input_dim), latent_dim_(latent_dim) {
  if (input_dim < 1 || latent_dim < 1) throw ParameterError("VAE dimensions must be >= 1");
  Rng rng(seed);
  auto dense = [&](std::size_t rows, std::size_t cols) {
    auto v = standard_normal(rng, rows * cols);
    const double s = 1.0 / std::sqrt(static_cast<double>(rows));
    for (auto& x : v) x *= s;
    return Tensor({rows, cols}, std::move(v));
  };
  params_.push_back(dense(input_dim, latent_dim));
  params_.push_back(Tensor::zeros({latent_dim}));
  params_.push_back(Tensor({input_dim, latent_dim},
                           std::vector<double>(input_dim * latent_dim, 0.0)));
  params_.push_back(Tensor::zeros({latent_dim}));
  params_.push_back(dense(latent_dim, input_dim));
  params_.push_back(Tensor::zeros({input_dim}));
}

void LinearVae::set_parameters(std::vector<Tensor> params) {
  if (params.size() != params_.size()) throw ContractError("VAE parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].shape() != params_[i].shape())
      throw ContractError("VAE parameter " + std::to_string(i) + " shape mismatch");
  params_ = std::move(params);
}

namespace {

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  auto y = matmul(x, w);
  std::vector<double> v(y.values());
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b[i % n];
  return Tensor(y.shape(), std::move(v));
}

}  // namespace

std::pair<Tensor, Tensor> LinearVae::encode(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != input_dim_) throw ContractError("VAE input must be {B, input_dim}");
  return {affine(x, params_[0], params_[1]), affine(x, params_[2], params_[3])};
}

Tensor LinearVae::decode(const Tensor& z) const {
  if (z.rank() != 2 || z.dim(1) != latent_dim_) throw ContractError("VAE latent must be {B, latent_dim}");
  return affine(z, params_[4], params_[5]);
}

ElboTerms vae_elbo(ad::Tape& tape, std::span<const ad::Var> params, const Tensor& x,
                   const Tensor& eps, double beta_kl) {
  if (params.size() != 6) throw ContractError("vae_elbo expects 6 parameters");
  if (x.rank() != 2 || eps.rank() != 2 || x.dim(0) != eps.dim(0)) {
    throw ContractError("vae_elbo: x and eps must be {B, .} with equal B");
  }
  if (params[0].shape() != Shape{x.dim(1), eps.dim(1)}) {
    throw ContractError("vae_elbo: parameter shapes do not match x and eps");
  }
  const double inv_b = 1.0 / static_cast<double>(x.dim(0));
  const auto xv = tape.constant(x);
  const auto ev = tape.constant(eps);
  const auto mean = ad::matmul(xv, params[0]) + params[1];
  const auto logvar = ad::matmul(xv, params[2]) + params[3];
  const auto z = mean + ad::exp(ad::scale(logvar, 0.5)) * ev;
  const auto recon = ad::matmul(z, params[4]) + params[5];
  const auto rec = ad::scale(ad::squared_norm(recon - xv), inv_b);
  const auto ones = tape.constant(Tensor::full(logvar.shape(), 1.0));
  const auto kl_terms = mean * mean + ad::exp(logvar) - logvar - ones;
  const auto kl = ad::scale(ad::sum(kl_terms), 0.5 * inv_b);
  return {rec + ad::scale(kl, beta_kl), rec, kl};
}

double gaussian_kl(std::span<const double> mean, std::span<const double> logvar) {
  if (mean.size() != logvar.size()) throw ContractError("gaussian_kl: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i)
    kl += mean[i] * mean[i] + std::exp(logvar[i]) - logvar[i] - 1.0;
  return 0.5 * kl;
}

VaeTrainingResult train_vae(LinearVae& vae, const Tensor& x, double beta_kl,
                            const OptimizerConfig& opt) {
  opt.validate();
  if (x.rank() != 2 || x.dim(1) != vae.input_dim() || x.dim(0) == 0) {
    throw ParameterError("train_vae: data must be nonempty {N, input_dim}");
  }
  const std::size_t n = x.dim(0), d = x.dim(1), k = vae.latent_dim();
  Optimizer optimizer(opt, vae.parameters());
  VaeTrainingResult result;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += opt.batch_size) {
      const std::size_t b = std::min(opt.batch_size, n - start);
      std::vector<double> xb(b * d);
      for (std::size_t i = 0; i < b; ++i)
        std::copy_n(x.data().begin() + static_cast<long>(order[start + i] * d), d,
                    xb.begin() + static_cast<long>(i * d));
      const Tensor batch({b, d}, std::move(xb));
      const Tensor eps({b, k}, standard_normal(rng, b * k));

      ad::Tape tape;
      std::vector<ad::Var> vars;
      for (const auto& p : vae.parameters()) vars.push_back(tape.variable(p));
      const auto terms = vae_elbo(tape, vars, batch, eps, beta_kl);
      const double loss = terms.loss.value().item();
      if (!std::isfinite(loss)) throw TrainingError("VAE loss is not finite");
      total += loss * static_cast<double>(b);
      const auto grads = tape.gradient(terms.loss, vars);
      vae.set_parameters(optimizer.step(vae.parameters(), grads));
    }
    result.losses.push_back(total / static_cast<double>(n));
  }
  return result;
}

}  // namespace tango
