#include "tango/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "tango/errors.hpp"

namespace tango {

std::string to_string(GammaMode mode) {
  switch (mode) {
    case GammaMode::kSnr: return "snr";
    case GammaMode::kMinSnr: return "min_snr";
    case GammaMode::kUniform: return "uniform";
  }
  return "snr";
}

GammaMode parse_gamma_mode(const std::string& text) {
  if (text == "snr") return GammaMode::kSnr;
  if (text == "min_snr") return GammaMode::kMinSnr;
  if (text == "uniform") return GammaMode::kUniform;
  throw ParameterError("unknown gamma mode: " + text);
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start,
                                    double beta_end, GammaConfig gamma) {
  if (steps < 1) throw ParameterError("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw ParameterError("schedule betas must satisfy 0 < start <= end < 1");
  }
  if (gamma.mode == GammaMode::kMinSnr && !(gamma.clamp > 0.0)) {
    throw ParameterError("min-SNR clamp must be > 0");
  }
  NoiseSchedule s;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  s.gamma_ = gamma;
  const auto n = static_cast<std::size_t>(steps);
  s.beta_.resize(n);
  s.alpha_.resize(n);
  s.alpha_bar_.resize(n);
  s.posterior_var_.resize(n);
  s.snr_.resize(n);
  s.gamma_w_.resize(n);
  double prod = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    const double beta = beta_start + t * (beta_end - beta_start);
    const double prev = prod;
    prod *= 1.0 - beta;
    s.beta_[i] = beta;
    s.alpha_[i] = 1.0 - beta;
    s.alpha_bar_[i] = prod;
    s.posterior_var_[i] = (1.0 - prev) / (1.0 - prod) * beta;
    s.snr_[i] = prod / (1.0 - prod);
    switch (gamma.mode) {
      case GammaMode::kSnr: s.gamma_w_[i] = s.snr_[i]; break;
      case GammaMode::kMinSnr:
        s.gamma_w_[i] = std::min(s.snr_[i], gamma.clamp) / s.snr_[i];
        break;
      case GammaMode::kUniform: s.gamma_w_[i] = 1.0; break;
    }
  }
  return s;
}

NoiseSchedule NoiseSchedule::default_schedule(GammaConfig gamma) {
  return linear(1000, 1e-4, 0.02, gamma);
}

NoiseSchedule NoiseSchedule::scaled_default(int steps, GammaConfig gamma) {
  if (steps < 1) throw ParameterError("schedule needs at least one step");
  const double k = 1000.0 / steps;
  return linear(steps, std::min(1e-4 * k, 0.999), std::min(0.02 * k, 0.999), gamma);
}

void NoiseSchedule::check_index(int n) const {
  if (n < 1 || n > steps()) {
    throw IndexError("step " + std::to_string(n) + " outside 1.." +
                     std::to_string(steps()));
  }
}

double NoiseSchedule::beta(int n) const { check_index(n); return beta_[n - 1]; }
double NoiseSchedule::alpha(int n) const { check_index(n); return alpha_[n - 1]; }
double NoiseSchedule::alpha_bar(int n) const {
  if (n == 0) return 1.0;
  check_index(n);
  return alpha_bar_[n - 1];
}
double NoiseSchedule::posterior_variance(int n) const {
  check_index(n);
  return posterior_var_[n - 1];
}
double NoiseSchedule::snr(int n) const { check_index(n); return snr_[n - 1]; }
double NoiseSchedule::gamma(int n) const { check_index(n); return gamma_w_[n - 1]; }

KeyValueConfig NoiseSchedule::to_config() const {
  KeyValueConfig cfg;
  cfg.set("N", static_cast<std::int64_t>(steps()));
  cfg.set("beta_start", beta_start_);
  cfg.set("beta_end", beta_end_);
  cfg.set("gamma_mode", to_string(gamma_.mode));
  cfg.set("clamp", gamma_.clamp);
  return cfg;
}

NoiseSchedule NoiseSchedule::from_config(const KeyValueConfig& cfg) {
  GammaConfig g;
  g.mode = parse_gamma_mode(cfg.get_string("gamma_mode", "snr"));
  g.clamp = cfg.get_double("clamp", 5.0);
  return linear(static_cast<int>(cfg.get_int("N", 1000)),
                cfg.get_double("beta_start", 1e-4),
                cfg.get_double("beta_end", 0.02), g);
}

std::uint64_t NoiseSchedule::fingerprint() const { return to_config().hash(); }

double snr_weight(const NoiseSchedule& s, int n, std::optional<double> clamp) {
  const double snr = s.snr(n);
  if (!clamp) return snr;
  return std::min(snr, *clamp) / snr;
}

}  // namespace tango
