#include "tango/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

void check_framing(std::size_t frame, std::size_t hop) {
  if (!is_power_of_two(frame)) throw ParameterError("frame must be a power of two >= 2");
  if (hop == 0 || hop > frame) throw ParameterError("hop must satisfy 0 < hop <= frame");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Weight of bin k in a one-sided Parseval sum.
double bin_weight(std::size_t k, std::size_t bins) {
  return (k == 0 || k + 1 == bins) ? 1.0 : 2.0;
}

}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw ParameterError("FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

std::vector<double> hann_window(std::size_t frame) {
  std::vector<double> w(frame);
  for (std::size_t i = 0; i < frame; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(frame));
  return w;
}

ComplexFrames stft(std::span<const double> signal, std::size_t frame, std::size_t hop) {
  check_framing(frame, hop);
  if (signal.size() < frame) throw ParameterError("signal shorter than one frame");
  const auto window = hann_window(frame);
  const std::size_t T = 1 + (signal.size() - frame) / hop;
  const std::size_t K = frame / 2 + 1;
  ComplexFrames out(T);
  std::vector<std::complex<double>> buf(frame);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < frame; ++i) buf[i] = signal[t * hop + i] * window[i];
    fft(buf);
    out[t].assign(buf.begin(), buf.begin() + static_cast<long>(K));
  }
  return out;
}

Tensor stft_magnitude(const Waveform& w, std::size_t frame, std::size_t hop) {
  const auto spec = stft(w.samples, frame, hop);
  const std::size_t K = frame / 2 + 1;
  std::vector<double> mag(spec.size() * K);
  for (std::size_t t = 0; t < spec.size(); ++t)
    for (std::size_t k = 0; k < K; ++k) mag[t * K + k] = std::abs(spec[t][k]);
  return Tensor({spec.size(), K}, std::move(mag));
}

std::vector<double> istft(const ComplexFrames& frames, std::size_t frame,
                          std::size_t hop) {
  check_framing(frame, hop);
  if (frames.empty()) throw ParameterError("istft needs at least one frame");
  const std::size_t K = frame / 2 + 1;
  const auto window = hann_window(frame);
  const std::size_t length = (frames.size() - 1) * hop + frame;
  std::vector<double> acc(length, 0.0), norm(length, 0.0);
  std::vector<std::complex<double>> buf(frame);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != K) throw ContractError("istft frame has wrong bin count");
    for (std::size_t k = 0; k < K; ++k) buf[k] = frames[t][k];
    for (std::size_t k = 1; k + 1 < K; ++k) buf[frame - k] = std::conj(frames[t][k]);
    fft(buf, true);
    for (std::size_t i = 0; i < frame; ++i) {
      acc[t * hop + i] += window[i] * buf[i].real();
      norm[t * hop + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) acc[i] = norm[i] > 0.0 ? acc[i] / norm[i] : 0.0;
  return acc;
}

Tensor mel_filterbank(std::size_t bins, std::size_t frame, double sample_rate) {
  if (!is_power_of_two(frame)) throw ParameterError("frame must be a power of two >= 2");
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be > 0");
  const std::size_t K = frame / 2 + 1;
  if (bins < 1 || bins > K) {
    throw ParameterError("mel bins must lie in 1.." + std::to_string(K));
  }
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(bins + 1));
  const double bin_hz = sample_rate / static_cast<double>(frame);

  std::vector<double> fb(bins * K, 0.0);
  for (std::size_t m = 0; m < bins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double v = 0.0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      fb[m * K + k] = v;
      total += v;
    }
    if (total == 0.0) {
      // Band narrower than one FFT bin: take the nearest bin.
      const auto k = std::min(K - 1, static_cast<std::size_t>(std::lround(mid / bin_hz)));
      fb[m * K + k] = 1.0;
      total = 1.0;
    }
    for (std::size_t k = 0; k < K; ++k) fb[m * K + k] /= total;
  }
  return Tensor({bins, K}, std::move(fb));
}

MelSpectrogram mel_spectrogram(const Waveform& w, std::size_t bins,
                               std::size_t frame, std::size_t hop) {
  const auto fb = mel_filterbank(bins, frame, w.sample_rate);
  const auto mag = stft_magnitude(w, frame, hop);
  std::vector<double> power(mag.size());
  for (std::size_t i = 0; i < power.size(); ++i) power[i] = mag[i] * mag[i];
  auto energies = matmul(Tensor(mag.shape(), std::move(power)), transpose(fb));
  return MelSpectrogram{std::move(energies), frame, hop, w.sample_rate};
}

Tensor mel_to_magnitude(const MelSpectrogram& mel) {
  const auto fb = mel_filterbank(mel.bins(), mel.frame, mel.sample_rate);
  const std::size_t K = fb.dim(1);
  const std::size_t T = mel.frames(), F = mel.bins();
  std::vector<double> out(T * K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double wsum = 0.0;
    for (std::size_t f = 0; f < F; ++f) wsum += fb[f * K + k];
    if (wsum == 0.0) continue;
    for (std::size_t t = 0; t < T; ++t) {
      double p = 0.0;
      for (std::size_t f = 0; f < F; ++f)
        p += fb[f * K + k] * std::max(0.0, mel.energies[t * F + f]);
      out[t * K + k] = std::sqrt(p / wsum);
    }
  }
  return Tensor({T, K}, std::move(out));
}

double pressure_level_db(const Waveform& w) {
  if (w.samples.empty()) throw UndefinedLevelError("pressure level of an empty signal");
  double sq = 0.0;
  for (double x : w.samples) sq += x * x;
  if (sq == 0.0) throw UndefinedLevelError("pressure level of a silent signal");
  const double rms = std::sqrt(sq / static_cast<double>(w.samples.size()));
  return 20.0 * std::log10(rms);
}

double spectral_convergence(std::span<const double> signal, const Tensor& magnitude,
                            std::size_t frame, std::size_t hop) {
  const auto spec = stft(signal, frame, hop);
  const std::size_t K = frame / 2 + 1;
  if (magnitude.rank() != 2 || magnitude.dim(0) != spec.size() || magnitude.dim(1) != K) {
    throw ContractError("magnitude shape does not match the signal framing");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < spec.size(); ++t)
    for (std::size_t k = 0; k < K; ++k) {
      const double m = magnitude[t * K + k];
      const double d = std::abs(spec[t][k]) - m;
      num += bin_weight(k, K) * d * d;
      den += bin_weight(k, K) * m * m;
    }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

GriffinLimResult griffin_lim(const Tensor& magnitude, std::size_t frame,
                             std::size_t hop, int iterations, std::uint64_t seed) {
  check_framing(frame, hop);
  if (iterations < 1) throw ParameterError("Griffin-Lim needs at least one iteration");
  const std::size_t K = frame / 2 + 1;
  if (magnitude.rank() != 2 || magnitude.dim(1) != K || magnitude.dim(0) < 1) {
    throw ContractError("magnitude must be T x (frame/2 + 1)");
  }
  const std::size_t T = magnitude.dim(0);
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  ComplexFrames target(T, std::vector<std::complex<double>>(K));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < K; ++k)
      target[t][k] = std::polar(magnitude[t * K + k], phase(rng));

  // Accelerated iteration (momentum on consistent spectra) with a fallback to
  // the plain projection; an update is accepted only if the error does not
  // grow, so errors are non-increasing.
  constexpr double kMomentum = 0.99;
  const auto project = [&](const ComplexFrames& spec) {
    ComplexFrames out(T, std::vector<std::complex<double>>(K));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < K; ++k) {
        const double a = std::abs(spec[t][k]);
        const auto unit = a > 0.0 ? spec[t][k] / a : std::complex<double>(1.0, 0.0);
        out[t][k] = magnitude[t * K + k] * unit;
      }
    return istft(out, frame, hop);
  };

  GriffinLimResult result;
  result.samples = istft(target, frame, hop);
  double error = spectral_convergence(result.samples, magnitude, frame, hop);
  auto current = stft(result.samples, frame, hop);
  auto previous = current;
  result.errors.push_back(error);
  for (int it = 1; it < iterations; ++it) {
    ComplexFrames extrapolated = current;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < K; ++k)
        extrapolated[t][k] += kMomentum * (current[t][k] - previous[t][k]);
    auto candidate = project(extrapolated);
    double cand_error = spectral_convergence(candidate, magnitude, frame, hop);
    if (!(cand_error <= error)) {
      candidate = project(current);
      cand_error = spectral_convergence(candidate, magnitude, frame, hop);
    }
    if (cand_error <= error) {
      result.samples = std::move(candidate);
      error = cand_error;
      previous = std::move(current);
      current = stft(result.samples, frame, hop);
    } else {
      previous = current;
    }
    result.errors.push_back(error);
  }
  return result;
}

Waveform griffin_lim(const MelSpectrogram& mel, int iterations, std::uint64_t seed) {
  auto res = griffin_lim(mel_to_magnitude(mel), mel.frame, mel.hop, iterations, seed);
  return Waveform{std::move(res.samples), mel.sample_rate};
}

Waveform sine_wave(double frequency, double amplitude, std::size_t length,
                   double sample_rate) {
  Waveform w{std::vector<double>(length), sample_rate};
  for (std::size_t i = 0; i < length; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * frequency *
                                        static_cast<double>(i) / sample_rate);
  return w;
}

Waveform white_noise(double rms, std::size_t length, std::uint64_t seed,
                     double sample_rate) {
  Rng rng(seed);
  auto v = standard_normal(rng, length);
  for (auto& x : v) x *= rms;
  return Waveform{std::move(v), sample_rate};
}

}  // namespace tango
