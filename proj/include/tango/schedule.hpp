#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tango/config.hpp"

namespace tango {

// How the per-step loss weight is derived from the signal-to-noise ratio.
enum class GammaMode {
  kSnr,     // weight = snr(n)
  kMinSnr,  // weight = min(snr(n), clamp) / snr(n)
  kUniform  // weight = 1
};

std::string to_string(GammaMode mode);
GammaMode parse_gamma_mode(const std::string& text);

struct GammaConfig {
  GammaMode mode = GammaMode::kSnr;
  double clamp = 5.0;  // only used by kMinSnr
};

// Precomputed linear-beta diffusion schedule. Step indices are 1-based
// (1..steps()); alpha_bar(0) is defined as 1 so the first posterior variance
// is exactly zero.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int steps, double beta_start, double beta_end,
                              GammaConfig gamma = {});

  // Default 1000-step schedule with beta in [1e-4, 0.02].
  static NoiseSchedule default_schedule(GammaConfig gamma = {});

  // Linear schedule for `steps` with the default betas scaled by
  // 1000 / steps, so the terminal alpha_bar stays close to the default's.
  static NoiseSchedule scaled_default(int steps, GammaConfig gamma = {});

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }
  const GammaConfig& gamma_config() const { return gamma_; }

  double beta(int n) const;
  double alpha(int n) const;
  // n may be 0 here (returns 1).
  double alpha_bar(int n) const;
  double posterior_variance(int n) const;
  double snr(int n) const;
  double gamma(int n) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  KeyValueConfig to_config() const;
  static NoiseSchedule from_config(const KeyValueConfig& cfg);
  // Fingerprint of the defining parameters, stored in latent dumps.
  std::uint64_t fingerprint() const;

 private:
  NoiseSchedule() = default;
  void check_index(int n) const;

  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  GammaConfig gamma_;
  std::vector<double> beta_, alpha_, alpha_bar_, posterior_var_, snr_, gamma_w_;
};

// Loss weight for step n: snr(n) without a clamp, min(snr, clamp) / snr with
// one.
double snr_weight(const NoiseSchedule& s, int n, std::optional<double> clamp);

}  // namespace tango
