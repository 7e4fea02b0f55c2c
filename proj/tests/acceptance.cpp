// Acceptance criteria 1-10. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tango/augment.hpp"
#include "tango/denoiser.hpp"
#include "tango/diffusion.hpp"
#include "tango/harness.hpp"
#include "tango/latent_codec.hpp"
#include "tango/metrics.hpp"
#include "tango/random.hpp"
#include "tango/signal.hpp"

using namespace tango;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

LatentTensor vec(std::vector<double> v) {
  const LatentShape shape{v.size(), 1, 1};
  return LatentTensor(shape, std::move(v));
}

GaussianStats isotropic(const std::vector<double>& mean, double var) {
  const auto d = mean.size();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = var;
  return {mean, Tensor({d, d}, cov), 0};
}

GaussianStats fit(const std::vector<LatentTensor>& zs) {
  std::vector<std::vector<double>> rows;
  for (const auto& z : zs) rows.emplace_back(z.values().begin(), z.values().end());
  return fit_gaussian(rows);
}

std::vector<std::pair<std::size_t, std::size_t>> random_coords(std::span<const Tensor> params,
                                                               std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) all.emplace_back(p, i);
  Rng rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(count, all.size()));
  return all;
}

// 1. Analytic-oracle end-to-end sampling.
Outcome analytic_end_to_end() {
  const Clock clock;
  const auto s = NoiseSchedule::scaled_default(100);
  const std::vector<double> mu = {1.0, -1.0, 2.0, 0.0};
  const double s2 = 0.25;
  const AnalyticGaussianDenoiser den(s, vec(mu), s2);

  // The closed-form estimate must match the independently derived conditional
  // mean E[eps | z_n] at every step.
  double formula_err = 0.0;
  for (int n = 1; n <= s.steps(); ++n) {
    const double a = std::sqrt(s.alpha_bar(n)), b = std::sqrt(1.0 - s.alpha_bar(n));
    const std::vector<double> z = {0.3, -2.0, 1.1, 0.7};
    const auto e = den.estimate(vec(z), n, ConditioningSequence::null(1));
    for (std::size_t i = 0; i < 4; ++i)
      formula_err = std::max(formula_err, std::abs(e[i] - oracle::posterior_noise_mean(z[i], a, b, mu[i], s2)));
  }

  const auto zs = sample_batch(s, den, ConditioningSequence::null(1), {1.0, 0.1}, 100, 11, 10000);
  const double mu_norm = std::sqrt(1.0 + 1.0 + 4.0);
  double worst_mean = 0.0, worst_var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& z : zs) m += z[i];
    m /= static_cast<double>(zs.size());
    for (const auto& z : zs) v += (z[i] - m) * (z[i] - m);
    v /= static_cast<double>(zs.size() - 1);
    worst_mean = std::max(worst_mean, std::abs(m - mu[i]) / mu_norm);
    worst_var = std::max(worst_var, std::abs(v - s2) / s2);
  }
  const double secs = clock.seconds();
  // Exact output law of this sampler: separates Monte Carlo noise from the
  // bias of the beta-tilde reverse variance at 100 steps.
  std::vector<double> betas;
  std::vector<int> visited;
  for (int n = 1; n <= s.steps(); ++n) betas.push_back(s.beta(n));
  for (const auto& c : sampling_plan(s, 100)) visited.push_back(c.model_step);
  const auto law = oracle::sampler_output_law(betas, visited, mu[2], s2);
  return {formula_err < 1e-12 && worst_mean <= 0.05 && worst_var <= 0.10 && secs < 60.0,
          fmt("max |mean err|/||mu*|| = %.4f (<= 0.05), max |var err|/s2 = %.4f (<= 0.10; exact "
              "sampler law var %.5f = %+.4f rel), oracle formula err %.1e, %.1f s",
              worst_mean, worst_var, law.var, law.var / s2 - 1.0, formula_err, secs)};
}

// 2. Chained single steps vs one-shot marginal.
Outcome marginal_consistency() {
  const auto s = NoiseSchedule::default_schedule();
  const int N = s.steps();
  const double z0 = 1.5;
  const std::size_t draws = 10000;
  std::vector<std::string> parts;
  bool ok = true;
  for (int n : {1, N / 2, N}) {
    Rng chain_rng(derive_seed(21, static_cast<std::uint64_t>(n)));
    Rng shot_rng(derive_seed(22, static_cast<std::uint64_t>(n)));
    std::normal_distribution<double> g;
    std::vector<double> chained(draws), one_shot(draws);
    for (std::size_t k = 0; k < draws; ++k) {
      double z = z0;
      for (int m = 1; m <= n; ++m) z = std::sqrt(1.0 - s.beta(m)) * z + std::sqrt(s.beta(m)) * g(chain_rng);
      chained[k] = z;
      one_shot[k] = forward_sample(s, vec({z0}), n, vec({g(shot_rng)}))[0];
    }
    const double ab = s.alpha_bar(n);
    const auto cdf = [&](double x) { return oracle::normal_cdf(x, std::sqrt(ab) * z0, 1.0 - ab); };
    const double d_two = oracle::ks_two_sample(chained, one_shot);
    const double d_chain = oracle::ks_statistic(chained, cdf);
    const double d_shot = oracle::ks_statistic(one_shot, cdf);
    ok = ok && d_two < 0.02 && d_chain < 0.02 && d_shot < 0.02;
    parts.push_back(fmt("n=%d KS(chain,shot)=%.4f KS(chain,exact)=%.4f KS(shot,exact)=%.4f", n, d_two,
                        d_chain, d_shot));
  }
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {ok, detail + " (all < 0.02)"};
}

// 3. Gradient fidelity for training_loss and vae_elbo.
Outcome gradient_fidelity() {
  const RunConfig cfg;
  auto mc = cfg.denoiser;
  mc.seed = 5;
  const TinyCondDenoiser den(mc);
  const auto s = cfg.schedule();
  const auto vocab = toy_vocabulary(mc.text_dim, 3);
  ToyDatasetSpec spec = cfg.dataset;
  spec.pairs = 8;
  spec.seed = 4;
  const auto data = make_toy_dataset(spec, vocab).items;
  Rng rng(9);
  std::vector<DiffusionExample> batch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto cond = i % 4 == 3 ? ConditioningSequence::null(mc.text_dim) : data[i].cond;
    const int n = 1 + static_cast<int>(12 * i);
    batch.push_back({data[i].z0, cond, n, LatentTensor(mc.latent, standard_normal(rng, mc.latent.numel()))});
  }
  const ad::Objective loss = [&](ad::Tape& t, std::span<const ad::Var> p) {
    return training_loss(t, s, den, p, batch);
  };
  const auto params = den.parameters();
  const auto c1 = oracle::compare_with_central_differences(loss, params, random_coords(params, 200, 1));

  const LinearVae vae(16, 8, 6);
  std::vector<Tensor> vparams(vae.parameters().begin(), vae.parameters().end());
  // Small nonzero log-variance weights so that path carries gradient.
  for (std::size_t i = 0; i < vparams[2].size(); ++i)
    vparams[2] = vparams[2].with_value(i, 0.05 * std::sin(static_cast<double>(i)));
  const Tensor x({6, 16}, standard_normal(rng, 96));
  const Tensor eps({6, 8}, standard_normal(rng, 48));
  const ad::Objective elbo = [&](ad::Tape& t, std::span<const ad::Var> p) {
    return vae_elbo(t, p, x, eps, 1.0).loss;
  };
  const auto c2 = oracle::compare_with_central_differences(elbo, vparams, random_coords(vparams, 200, 2));
  return {c1.checked >= 200 && c2.checked >= 200 && c1.max_relative_error < 1e-4 && c2.max_relative_error < 1e-4,
          fmt("training_loss max rel err %.2e over %zu coords; vae_elbo max rel err %.2e over %zu coords "
              "(< 1e-4)",
              c1.max_relative_error, c1.checked, c2.max_relative_error, c2.checked)};
}

// 4. Mixing algebra.
Outcome mixing_algebra() {
  bool ok = true;
  double equal_dev = 0.0;
  for (double g : {-60.0, -12.0, 0.0, 6.0}) equal_dev = std::max(equal_dev, std::abs(relative_weight(g, g) - 0.5));
  ok = ok && equal_dev == 0.0;

  Rng rng(3);
  std::uniform_real_distribution<double> level(-80.0, 10.0);
  double comp = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = level(rng), b = level(rng);
    comp = std::max(comp, std::abs(relative_weight(a, b) + relative_weight(b, a) - 1.0));
  }
  ok = ok && comp <= 1e-15;

  double worst_rms = 0.0, worst_swap = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto unit = [&](std::uint64_t seed) {
      auto w = white_noise(1.0, 8000, seed);
      double e = 0.0;
      for (double v : w.samples) e += v * v;
      const double r = std::sqrt(e / static_cast<double>(w.size()));
      for (auto& v : w.samples) v /= r;
      return w;
    };
    const auto x1 = unit(derive_seed(trial, 1)), x2 = unit(derive_seed(trial, 2));
    const auto m = mix_pair(x1, x2).audio;
    double e = 0.0;
    for (double v : m.samples) e += v * v;
    worst_rms = std::max(worst_rms, std::abs(std::sqrt(e / static_cast<double>(m.size())) - 1.0));

    auto y2 = white_noise(std::pow(10.0, level(rng) / 20.0), 5000, derive_seed(trial, 3));
    const auto ab = mix_pair(x1, y2).audio, ba = mix_pair(y2, x1).audio;
    for (std::size_t i = 0; i < ab.size(); ++i)
      worst_swap = std::max(worst_swap, std::abs(ab.samples[i] - ba.samples[i]));
  }
  ok = ok && worst_rms <= 0.05 && worst_swap <= 1e-12;
  return {ok, fmt("|p(G,G)-0.5| = %.1e; max complementarity err %.1e (<= 1e-15); max |RMS-1| = %.4f "
                  "(<= 0.05, 100 trials); max swap diff %.1e (<= 1e-12)",
                  equal_dev, comp, worst_rms, worst_swap)};
}

// 5. Metric closed forms.
Outcome metric_closed_forms() {
  const auto n01 = isotropic({0.0}, 1.0);
  const double shift = frechet_distance(n01, isotropic({1.0}, 1.0));
  const double spread = frechet_distance(n01, isotropic({0.0}, 4.0));
  const double oracle_shift = oracle::frechet_isotropic(0, 1, 1, 1, 1);
  const double oracle_spread = oracle::frechet_isotropic(0, 1, 0, 4, 1);

  std::vector<MelSpectrogram> mels;
  for (std::uint64_t i = 0; i < 16; ++i) {
    auto w = white_noise(0.1 + 0.02 * static_cast<double>(i), 8192, i);
    const auto tone = sine_wave(150.0 * static_cast<double>(i + 1), 0.3, 8192);
    for (std::size_t k = 0; k < w.size(); ++k) w.samples[k] += tone.samples[k];
    mels.push_back(mel_spectrogram(w, 64));
  }
  const MelStatsEmbedder stats(64);
  const RandomProjectionEmbedder proj(64, 32, 1);
  const RandomLinearClassifier cls(64, 10, 2);
  const Embedder* embedders[] = {&stats, &proj};
  const auto rows = evaluate_suite(mels, mels, embedders, cls);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.value);
  const double kl = label_kl(mels, mels, cls);
  const bool ok = std::abs(shift - 1.0) <= 1e-9 && std::abs(spread - 1.0) <= 1e-9 &&
                  std::abs(oracle_shift - 1.0) <= 1e-15 && std::abs(oracle_spread - 1.0) <= 1e-15 &&
                  worst < 1e-6 && kl == 0.0;
  return {ok, fmt("FD(N(0,1),N(1,1)) = %.12f, FD(N(0,1),N(0,4)) = %.12f; identical-set suite max %.2e "
                  "over %zu metrics; KL(identical) = %g",
                  shift, spread, worst, rows.size(), kl)};
}

// 6. Classifier-free guidance contract.
Outcome cfg_contract() {
  const RunConfig cfg;
  auto mc = cfg.denoiser;
  mc.seed = 8;
  const TinyCondDenoiser den(mc);
  const auto vocab = toy_vocabulary(mc.text_dim, 1);
  const auto s = cfg.schedule();
  bool ok = true;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(trial);
    const LatentTensor z(mc.latent, standard_normal(rng, mc.latent.numel()));
    const int n = 1 + static_cast<int>(trial * 5 % 100);
    const auto tau = vocab.encode(trial % 2 ? "high" : "low");
    const auto c = den.estimate(z, n, tau);
    const auto u = den.estimate(z, n, ConditioningSequence::null(mc.text_dim));
    ok = ok && cfg_combine(c, u, 1.0) == c && cfg_combine(c, u, 0.0) == u;
    // Through the sampler step as well: zero noise leaves the posterior mean.
    const auto coeffs = reverse_coefficients(s, n);
    const auto zero = LatentTensor::zeros(z.shape());
    ok = ok && reverse_step(coeffs, den, z, tau, {1.0, 0.1}, zero) == posterior_mean(coeffs, z, c);
    ok = ok && reverse_step(coeffs, den, z, tau, {0.0, 0.1}, zero) == posterior_mean(coeffs, z, u);
  }
  return {ok, "w=1 == conditional and w=0 == unconditional, bitwise, for cfg_combine and reverse_step "
              "(20 trials)"};
}

// 7 and 9 share one training run of the default harness configuration.
struct ToyRun {
  double train_seconds = 0.0;
  TrainingTrace trace;
  std::vector<SampleRow> rows;
  std::string error;
};

ToyRun toy_run() {
  ToyRun out;
  try {
    RunConfig cfg;
    cfg.out = std::filesystem::temp_directory_path() / "tango_acceptance_toy";
    std::filesystem::remove_all(cfg.out);
    cfg.inference_steps = 100;
    cfg.sweep_guidance = {1.0, 3.0};
    const Clock clock;
    out.trace = cmd_train(cfg).trace;
    out.train_seconds = clock.seconds();
    out.rows = cmd_sample(cfg, SweepKind::kGuidance).rows;
    std::filesystem::remove_all(cfg.out);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

Outcome toy_generation(const ToyRun& run) {
  if (!run.error.empty()) return {false, "run failed: " + run.error};
  const double acc1 = run.rows.at(0).accuracy.value(), acc3 = run.rows.at(1).accuracy.value();
  return {acc3 >= 0.9 && acc3 > acc1 && run.train_seconds < 60.0,
          fmt("accuracy w=3: %.3f (>= 0.90), w=1: %.3f (< w=3), %zu samples each at 100 steps; "
              "training %.1f s on %zu pairs (< 60 s)",
              acc3, acc1, run.rows[1].count, run.train_seconds, RunConfig{}.dataset.pairs)};
}

Outcome dropout_rate(const ToyRun& run) {
  if (!run.error.empty()) return {false, "run failed: " + run.error};
  std::size_t samples = 0, dropped = 0;
  for (const auto& e : run.trace.epochs) {
    if (samples >= 10000) break;
    samples += e.samples;
    dropped += e.dropped;
  }
  const double frac = static_cast<double>(dropped) / static_cast<double>(samples);
  return {samples >= 10000 && frac >= 0.08 && frac <= 0.12,
          fmt("dropped %zu of %zu training samples = %.4f (in [0.08, 0.12])", dropped, samples, frac)};
}

// 8. Fréchet distance to the data Gaussian over sampler step counts.
Outcome steps_monotonicity() {
  const auto s = NoiseSchedule::default_schedule();
  const std::vector<double> mu = {1.0, -1.0, 2.0, 0.0};
  const double s2 = 0.25;
  const AnalyticGaussianDenoiser den(s, vec(mu), s2);
  const auto truth = isotropic(mu, s2);
  std::vector<double> betas;
  for (int n = 1; n <= s.steps(); ++n) betas.push_back(s.beta(n));
  std::vector<double> fds, exact;
  std::string detail;
  for (int steps : {10, 50, 200}) {
    const auto zs = sample_batch(s, den, ConditioningSequence::null(1), {1.0, 0.1}, steps, 31, 10000);
    fds.push_back(frechet_distance(fit(zs), truth));
    std::vector<int> visited;
    for (const auto& c : sampling_plan(s, steps)) visited.push_back(c.model_step);
    double e = 0.0;
    for (double m : mu) {
      const auto law = oracle::sampler_output_law(betas, visited, m, s2);
      e += oracle::frechet_isotropic(law.mean, law.var, m, s2, 1);
    }
    exact.push_back(e);
    detail += fmt("%s%d steps: FD %.5f (exact law %.5f)", detail.empty() ? "" : "; ", steps, fds.back(), e);
  }
  return {fds[1] <= fds[0] && fds[2] <= fds[1], detail + "; required non-increasing over 10^4 samples each"};
}

// 10. DSP sanity.
Outcome dsp_sanity() {
  const auto w = white_noise(0.25, 16000, 12);
  const double g = pressure_level_db(w);
  double scaling = 0.0;
  for (double c : {1e-3, 0.1, 0.5, 2.0, 31.0}) {
    auto sc = w;
    for (auto& x : sc.samples) x *= c;
    scaling = std::max(scaling, std::abs(pressure_level_db(sc) - (g + 20.0 * std::log10(c))));
  }

  const std::size_t frame = 1024, hop = 256, K = frame / 2 + 1;
  const auto mag = stft_magnitude(w, frame, hop);
  const auto win = hann_window(frame);
  double time_e = 0.0, freq_e = 0.0;
  for (std::size_t t = 0; t < mag.dim(0); ++t) {
    for (std::size_t i = 0; i < frame; ++i) time_e += std::pow(w.samples[t * hop + i] * win[i], 2);
    for (std::size_t k = 0; k < K; ++k)
      freq_e += (k == 0 || k == K - 1 ? 1.0 : 2.0) * std::pow(mag[t * K + k], 2) / static_cast<double>(frame);
  }
  const double parseval = std::abs(freq_e - time_e) / time_e;

  Waveform tones{std::vector<double>(16000), 16000.0};
  for (std::size_t i = 0; i < tones.size(); ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    tones.samples[i] = 0.4 * std::sin(2 * std::numbers::pi * 523.0 * t) +
                       0.2 * std::sin(2 * std::numbers::pi * (300.0 * t + 400.0 * t * t));
  }
  const auto gl = griffin_lim(stft_magnitude(tones, frame, hop), frame, hop, 60, 4);
  std::size_t increases = 0;
  for (std::size_t i = 1; i < gl.errors.size(); ++i) increases += gl.errors[i] > gl.errors[i - 1];
  const bool ok = scaling <= 1e-12 && parseval <= 1e-6 && increases == 0 && gl.errors.back() <= gl.errors.front();
  return {ok, fmt("scaling-law max err %.1e (<= 1e-12); Parseval rel err %.1e (<= 1e-6); Griffin-Lim "
                  "error %.4f -> %.4f over 60 iterations with %zu increases",
                  scaling, parseval, gl.errors.front(), gl.errors.back(), increases)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };
  report(1, "analytic-oracle end-to-end", analytic_end_to_end);
  report(2, "marginal consistency", marginal_consistency);
  report(3, "gradient fidelity", gradient_fidelity);
  report(4, "mixing algebra", mixing_algebra);
  report(5, "metric closed forms", metric_closed_forms);
  report(6, "CFG contract", cfg_contract);
  const auto toy = toy_run();
  report(7, "toy conditional generation", [&] { return toy_generation(toy); });
  report(8, "steps monotonicity", steps_monotonicity);
  report(9, "conditioning dropout rate", [&] { return dropout_rate(toy); });
  report(10, "DSP sanity", dsp_sanity);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
