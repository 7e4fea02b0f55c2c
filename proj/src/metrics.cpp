#include "tango/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "tango/config.hpp"
#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

namespace {

using Matrix = Eigen::MatrixXd;

Matrix to_eigen(const Tensor& t) {
  Matrix m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m(i, j) = t[i * t.dim(1) + j];
  return m;
}

Tensor from_eigen(const Matrix& m) {
  std::vector<double> v(static_cast<std::size_t>(m.rows() * m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      v[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::move(v));
}

Matrix sqrt_psd(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw ContractError("eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt_psd(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw ContractError("eigendecomposition failed");
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

std::vector<double> log_mel_frame_mean(const MelSpectrogram& mel, std::size_t bins) {
  if (mel.bins() != bins) {
    throw ContractError("embedder expects " + std::to_string(bins) + " mel bins, got " +
                        std::to_string(mel.bins()));
  }
  if (mel.frames() == 0) throw ContractError("mel has no frames");
  std::vector<double> out(bins, 0.0);
  for (std::size_t t = 0; t < mel.frames(); ++t)
    for (std::size_t f = 0; f < bins; ++f)
      out[f] += std::log(std::max(0.0, mel.energies[t * bins + f]) + 1e-10);
  for (auto& v : out) v /= static_cast<double>(mel.frames());
  return out;
}

Tensor gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  auto v = standard_normal(rng, rows * cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (auto& x : v) x *= s;
  return Tensor({rows, cols}, std::move(v));
}

}  // namespace

GaussianStats fit_gaussian(std::span<const std::vector<double>> embeddings) {
  if (embeddings.size() < 2) throw ParameterError("fit_gaussian needs at least 2 embeddings");
  const std::size_t d = embeddings.front().size();
  if (d < 1) throw ParameterError("embedding dimension must be >= 1");
  const auto n = static_cast<double>(embeddings.size());
  std::vector<double> mean(d, 0.0);
  for (const auto& e : embeddings) {
    if (e.size() != d) throw ContractError("embeddings have differing dimensions");
    for (std::size_t i = 0; i < d; ++i) mean[i] += e[i];
  }
  for (auto& m : mean) m /= n;
  std::vector<double> cov(d * d, 0.0);
  for (const auto& e : embeddings)
    for (std::size_t i = 0; i < d; ++i) {
      const double di = e[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += di * (e[j] - mean[j]);
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= n - 1.0;
      cov[j * d + i] = cov[i * d + j];
    }
  return {std::move(mean), Tensor({d, d}, std::move(cov)), embeddings.size()};
}

Tensor symmetric_sqrt(const Tensor& m) {
  if (m.rank() != 2 || m.dim(0) != m.dim(1)) throw ContractError("symmetric_sqrt needs a square matrix");
  return from_eigen(sqrt_psd(to_eigen(m)));
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw ContractError("frechet_distance: dimensions " + std::to_string(a.dim()) +
                        " and " + std::to_string(b.dim()) + " differ");
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.mean[i] - b.mean[i];
    mean_term += d * d;
  }
  const Matrix sa = to_eigen(a.cov), sb = to_eigen(b.cov);
  const Matrix ra = sqrt_psd(sa);
  const double cross = trace_sqrt_psd(ra * sb * ra);
  const double value = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

std::vector<double> MelStatsEmbedder::embed(const MelSpectrogram& mel) const {
  return log_mel_frame_mean(mel, bins_);
}

RandomProjectionEmbedder::RandomProjectionEmbedder(std::size_t bins, std::size_t out_dim,
                                                   std::uint64_t seed)
    : bins_(bins), out_dim_(out_dim) {
  if (bins < 1 || out_dim < 1) throw ParameterError("embedder dimensions must be >= 1");
  projection_ = gaussian_matrix(bins, out_dim, derive_seed(seed, 0x656d6264ULL));
}

std::vector<double> RandomProjectionEmbedder::embed(const MelSpectrogram& mel) const {
  // Projection is linear, so the frame average commutes with it.
  const auto mean_log = log_mel_frame_mean(mel, bins_);
  std::vector<double> out(out_dim_, 0.0);
  for (std::size_t f = 0; f < bins_; ++f)
    for (std::size_t k = 0; k < out_dim_; ++k)
      out[k] += mean_log[f] * projection_[f * out_dim_ + k];
  return out;
}

RandomLinearClassifier::RandomLinearClassifier(std::size_t bins, std::size_t labels,
                                               std::uint64_t seed)
    : stats_(bins), labels_(labels) {
  if (labels < 2) throw ParameterError("classifier needs at least 2 labels");
  weight_ = gaussian_matrix(bins, labels, derive_seed(seed, 0x636c6173ULL));
  Rng rng(derive_seed(seed, 0x62696173ULL));
  bias_ = standard_normal(rng, labels);
}

std::vector<double> RandomLinearClassifier::probabilities(const MelSpectrogram& mel) const {
  const auto x = stats_.embed(mel);
  std::vector<double> logits(bias_);
  for (std::size_t f = 0; f < x.size(); ++f)
    for (std::size_t k = 0; k < labels_; ++k) logits[k] += x[f] * weight_[f * labels_ + k];
  // Logits are tempered by 1/sqrt(bins).
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp((l - top) * scale);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return logits;
}

double floored_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw ContractError("floored_kl: size mismatch");
  auto floor_norm = [](std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    double total = 0.0;
    for (auto& x : out) {
      x = std::max(x, kProbabilityFloor);
      total += x;
    }
    for (auto& x : out) x /= total;
    return out;
  };
  const auto pf = floor_norm(p), qf = floor_norm(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < pf.size(); ++i) kl += pf[i] * std::log(pf[i] / qf[i]);
  return std::max(kl, 0.0);
}

double label_kl(std::span<const MelSpectrogram> reference,
                std::span<const MelSpectrogram> generated,
                const LabelClassifier& classifier) {
  if (reference.size() != generated.size()) {
    throw ParameterError("label_kl: " + std::to_string(reference.size()) +
                         " reference vs " + std::to_string(generated.size()) +
                         " generated items");
  }
  if (reference.empty()) throw ParameterError("label_kl needs at least one pair");
  double total = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    total += floored_kl(classifier.probabilities(reference[i]),
                        classifier.probabilities(generated[i]));
  }
  return total / static_cast<double>(reference.size());
}

std::vector<MetricRow> evaluate_suite(std::span<const MelSpectrogram> reference,
                                      std::span<const MelSpectrogram> generated,
                                      std::span<const Embedder* const> embedders,
                                      const LabelClassifier& classifier) {
  if (reference.empty() || generated.empty()) throw ParameterError("evaluate_suite needs nonempty sets");
  std::vector<MetricRow> rows;
  for (const Embedder* e : embedders) {
    std::vector<std::vector<double>> ra, ga;
    for (const auto& m : reference) ra.push_back(e->embed(m));
    for (const auto& m : generated) ga.push_back(e->embed(m));
    rows.push_back({"frechet", e->name(), frechet_distance(fit_gaussian(ra), fit_gaussian(ga))});
  }
  rows.push_back({"kl", "classifier", label_kl(reference, generated, classifier)});
  return rows;
}

std::string format_metric_csv(std::span<const MetricRow> rows) {
  std::string out = "metric,embedder,value\n";
  for (const auto& r : rows) out += r.metric + "," + r.embedder + "," + format_double(r.value) + "\n";
  return out;
}

}  // namespace tango
