#include "tango/diffusion.hpp"

#include <cmath>
#include <map>

#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

void GuidanceConfig::validate() const {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("guidance scale must be >= 0");
  if (!(cond_drop_prob >= 0.0 && cond_drop_prob <= 1.0)) {
    throw ParameterError("cond_drop_prob must lie in [0, 1]");
  }
}

LatentTensor forward_sample(const NoiseSchedule& s, const LatentTensor& z0,
                            int step, const LatentTensor& eps) {
  require_same_shape(z0, eps, "forward_sample");
  const double abar = s.alpha_bar(step);
  return axpby(std::sqrt(abar), z0, std::sqrt(1.0 - abar), eps);
}

double training_loss(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                     std::span<const DiffusionExample> batch) {
  if (batch.empty()) throw ParameterError("empty training batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto z_n = forward_sample(s, ex.z0, ex.step, ex.noise);
    const auto eps_hat = denoiser.estimate(z_n, ex.step, ex.cond);
    require_same_shape(eps_hat, ex.noise, "denoiser output");
    double sq = 0.0;
    for (std::size_t i = 0; i < eps_hat.size(); ++i) {
      const double d = ex.noise[i] - eps_hat[i];
      sq += d * d;
    }
    total += s.gamma(ex.step) * sq;
  }
  return total / static_cast<double>(batch.size());
}

ad::Var training_loss(ad::Tape& tape, const NoiseSchedule& s,
                      const DifferentiableEstimator& denoiser,
                      std::span<const ad::Var> params,
                      std::span<const DiffusionExample> batch) {
  if (batch.empty()) throw ParameterError("empty training batch");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    groups[batch[i].cond.key()].push_back(i);
  }
  std::vector<ad::Var> parts;
  for (const auto& [key, members] : groups) {
    std::vector<LatentTensor> z_n;
    std::vector<int> steps;
    std::vector<double> target, weight;
    for (auto i : members) {
      const auto& ex = batch[i];
      z_n.push_back(forward_sample(s, ex.z0, ex.step, ex.noise));
      steps.push_back(ex.step);
      target.insert(target.end(), ex.noise.values().begin(), ex.noise.values().end());
      weight.push_back(s.gamma(ex.step));
    }
    const auto& cond = batch[members.front()].cond;
    auto eps_hat = denoiser.estimate_on_tape(tape, params, z_n, steps, cond);
    const std::size_t B = members.size();
    if (eps_hat.shape() != Shape{B, z_n.front().size()}) {
      throw ContractError("denoiser output shape " + shape_to_string(eps_hat.shape()) +
                          " does not match the noise");
    }
    auto diff = tape.constant(Tensor({B, z_n.front().size()}, std::move(target))) - eps_hat;
    auto w = tape.constant(Tensor({B, 1}, std::move(weight)));
    parts.push_back(ad::sum(w * (diff * diff)));
  }
  ad::Var total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total = total + parts[i];
  return ad::scale(total, 1.0 / static_cast<double>(batch.size()));
}

LatentTensor cfg_combine(const LatentTensor& eps_cond,
                         const LatentTensor& eps_uncond, double w) {
  require_same_shape(eps_cond, eps_uncond, "cfg_combine");
  if (w == 1.0) return eps_cond;
  if (w == 0.0) return eps_uncond;
  return axpby(w, eps_cond, 1.0 - w, eps_uncond);
}

ReverseStep reverse_coefficients(const NoiseSchedule& s, int step) {
  ReverseStep r;
  r.model_step = step;
  r.alpha = s.alpha(step);
  r.alpha_bar = s.alpha_bar(step);
  r.alpha_bar_prev = s.alpha_bar(step - 1);
  r.posterior_variance = s.posterior_variance(step);
  return r;
}

std::vector<ReverseStep> sampling_plan(const NoiseSchedule& s, int count) {
  const int N = s.steps();
  if (count < 1 || count > N) {
    throw ParameterError("inference steps must lie in 1.." + std::to_string(N));
  }
  if (count == N) {
    std::vector<ReverseStep> plan;
    for (int n = N; n >= 1; --n) plan.push_back(reverse_coefficients(s, n));
    return plan;
  }
  std::vector<int> idx(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) {
    idx[static_cast<std::size_t>(k - 1)] =
        static_cast<int>((static_cast<long long>(k) * N) / count);
  }
  std::vector<ReverseStep> plan;
  for (int k = count; k >= 1; --k) {
    ReverseStep r;
    r.model_step = idx[static_cast<std::size_t>(k - 1)];
    r.alpha_bar = s.alpha_bar(r.model_step);
    r.alpha_bar_prev = k > 1 ? s.alpha_bar(idx[static_cast<std::size_t>(k - 2)]) : 1.0;
    r.alpha = r.alpha_bar / r.alpha_bar_prev;
    r.posterior_variance =
        (1.0 - r.alpha_bar_prev) / (1.0 - r.alpha_bar) * (1.0 - r.alpha);
    plan.push_back(r);
  }
  return plan;
}

LatentTensor posterior_mean(const ReverseStep& c, const LatentTensor& z_n,
                            const LatentTensor& eps_hat) {
  const double inv_sqrt_alpha = 1.0 / std::sqrt(c.alpha);
  const double eps_coeff = (1.0 - c.alpha) / std::sqrt(1.0 - c.alpha_bar);
  return axpby(inv_sqrt_alpha, z_n, -inv_sqrt_alpha * eps_coeff, eps_hat);
}

namespace {

LatentTensor add_noise(const ReverseStep& c, const LatentTensor& mean,
                       const LatentTensor& noise) {
  require_same_shape(mean, noise, "reverse_step noise");
  if (c.posterior_variance == 0.0) return mean;
  return axpby(1.0, mean, std::sqrt(c.posterior_variance), noise);
}

std::vector<LatentTensor> guided_batch(const NoiseEstimator& denoiser,
                                       std::span<const LatentTensor> z, int step,
                                       const ConditioningSequence& cond,
                                       double w, std::size_t d_text) {
  const auto null = ConditioningSequence::null(d_text);
  if (w == 1.0) return denoiser.estimate_batch(z, step, cond);
  if (w == 0.0) return denoiser.estimate_batch(z, step, null);
  auto c = denoiser.estimate_batch(z, step, cond);
  auto u = denoiser.estimate_batch(z, step, null);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = cfg_combine(c[i], u[i], w);
  return c;
}

}  // namespace

LatentTensor reverse_step(const ReverseStep& coeffs,
                          const NoiseEstimator& denoiser,
                          const LatentTensor& z_n,
                          const ConditioningSequence& cond,
                          const GuidanceConfig& g, const LatentTensor& noise) {
  g.validate();
  require_same_shape(z_n, noise, "reverse_step");
  auto eps = guided_batch(denoiser, std::span(&z_n, 1), coeffs.model_step, cond,
                          g.w, cond.d_text());
  require_same_shape(eps.front(), z_n, "denoiser output");
  return add_noise(coeffs, posterior_mean(coeffs, z_n, eps.front()), noise);
}

LatentTensor reverse_step(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                          const LatentTensor& z_n, int step,
                          const ConditioningSequence& cond,
                          const GuidanceConfig& g, const LatentTensor& noise) {
  return reverse_step(reverse_coefficients(s, step), denoiser, z_n, cond, g, noise);
}

std::vector<LatentTensor> sample_batch(const NoiseSchedule& s,
                                       const NoiseEstimator& denoiser,
                                       const ConditioningSequence& cond,
                                       const GuidanceConfig& g, int steps,
                                       std::uint64_t seed, std::size_t count) {
  g.validate();
  if (steps < 1) throw ParameterError("inference steps must be >= 1");
  const auto plan = sampling_plan(s, steps);
  const auto shape = denoiser.latent_shape();
  std::vector<Rng> rngs;
  std::vector<LatentTensor> z;
  rngs.reserve(count);
  z.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    rngs.emplace_back(derive_seed(seed, i));
    z.emplace_back(shape, standard_normal(rngs.back(), shape.numel()));
  }
  for (const auto& c : plan) {
    auto eps = guided_batch(denoiser, z, c.model_step, cond, g.w, cond.d_text());
    for (std::size_t i = 0; i < count; ++i) {
      require_same_shape(eps[i], z[i], "denoiser output");
      auto mean = posterior_mean(c, z[i], eps[i]);
      if (c.posterior_variance > 0.0) {
        LatentTensor noise(shape, standard_normal(rngs[i], shape.numel()));
        z[i] = add_noise(c, mean, noise);
      } else {
        z[i] = std::move(mean);
      }
    }
  }
  return z;
}

LatentTensor sample(const NoiseSchedule& s, const NoiseEstimator& denoiser,
                    const ConditioningSequence& cond, const GuidanceConfig& g,
                    int steps, std::uint64_t seed) {
  return sample_batch(s, denoiser, cond, g, steps, seed, 1).front();
}

}  // namespace tango
