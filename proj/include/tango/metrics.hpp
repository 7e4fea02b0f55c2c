#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tango/signal.hpp"
#include "tango/tensor.hpp"

namespace tango {

struct GaussianStats {
  std::vector<double> mean;
  Tensor cov;  // d x d, symmetric
  std::size_t count = 0;

  std::size_t dim() const { return mean.size(); }
};

// Sample mean and unbiased, symmetrized covariance. Needs >= 2 points.
GaussianStats fit_gaussian(std::span<const std::vector<double>> embeddings);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with
// eigenvalues clamped at 0 inside both square roots. Never negative.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Symmetric PSD square root; eigenvalues below 0 are clamped.
Tensor symmetric_sqrt(const Tensor& m);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const MelSpectrogram& mel) const = 0;
};

// Per-bin mean of log(energy + 1e-10); d = mel bins.
class MelStatsEmbedder final : public Embedder {
 public:
  explicit MelStatsEmbedder(std::size_t bins) : bins_(bins) {}
  std::string name() const override { return "melstats"; }
  std::size_t dim() const override { return bins_; }
  std::vector<double> embed(const MelSpectrogram& mel) const override;

 private:
  std::size_t bins_;
};

// Seeded Gaussian projection of each log-mel frame to `out_dim`, averaged
// over frames.
class RandomProjectionEmbedder final : public Embedder {
 public:
  RandomProjectionEmbedder(std::size_t bins, std::size_t out_dim = 32,
                           std::uint64_t seed = 0);
  std::string name() const override { return "randproj"; }
  std::size_t dim() const override { return out_dim_; }
  std::vector<double> embed(const MelSpectrogram& mel) const override;

 private:
  std::size_t bins_;
  std::size_t out_dim_;
  Tensor projection_;  // bins x out_dim
};

class LabelClassifier {
 public:
  virtual ~LabelClassifier() = default;
  virtual std::size_t labels() const = 0;
  // Nonnegative, sums to 1.
  virtual std::vector<double> probabilities(const MelSpectrogram& mel) const = 0;
};

// softmax(W^T melstats(mel) + b) with W, b seeded Gaussians.
class RandomLinearClassifier final : public LabelClassifier {
 public:
  RandomLinearClassifier(std::size_t bins, std::size_t labels = 10,
                         std::uint64_t seed = 0);
  std::size_t labels() const override { return labels_; }
  std::vector<double> probabilities(const MelSpectrogram& mel) const override;

 private:
  MelStatsEmbedder stats_;
  std::size_t labels_;
  Tensor weight_;  // bins x labels
  std::vector<double> bias_;
};

inline constexpr double kProbabilityFloor = 1e-8;

// KL(p || q) after flooring both at kProbabilityFloor and renormalizing.
double floored_kl(std::span<const double> p, std::span<const double> q);

// Mean over positional pairs of KL(P_ref || P_gen).
double label_kl(std::span<const MelSpectrogram> reference,
                std::span<const MelSpectrogram> generated,
                const LabelClassifier& classifier);

struct MetricRow {
  std::string metric;    // "frechet" or "kl"
  std::string embedder;  // embedder name, or classifier label for kl
  double value = 0.0;
};

// One Frechet row per embedder, then one KL row.
std::vector<MetricRow> evaluate_suite(std::span<const MelSpectrogram> reference,
                                      std::span<const MelSpectrogram> generated,
                                      std::span<const Embedder* const> embedders,
                                      const LabelClassifier& classifier);

std::string format_metric_csv(std::span<const MetricRow> rows);

}  // namespace tango
