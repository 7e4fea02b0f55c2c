#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "tango/errors.hpp"
#include "tango/signal.hpp"
#include "tango/wav.hpp"

using namespace tango;

namespace {

Waveform constant(double v, std::size_t n) { return Waveform{std::vector<double>(n, v), 16000.0}; }

Waveform three_tones(std::size_t n) {
  Waveform w{std::vector<double>(n), 16000.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    w.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * 440.0 * t) +
                   0.3 * std::sin(2 * std::numbers::pi * 1210.0 * t + 0.4) +
                   0.1 * std::sin(2 * std::numbers::pi * 3000.0 * t + 1.0);
  }
  return w;
}

}  // namespace

TEST(Fft, MatchesDirectDft) {
  const std::size_t n = 16;
  std::vector<std::complex<double>> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = {std::sin(0.3 * i) + 0.1 * i, std::cos(1.7 * i)};
  auto y = x;
  fft(y);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t j = 0; j < n; ++j)
      acc += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j * k) / n);
    EXPECT_LT(std::abs(acc - y[k]), 1e-12);
  }
  fft(y, true);
  for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(y[i] - x[i]), 1e-13);
}

TEST(Stft, BinCentredSineConcentratesInMainLobe) {
  const std::size_t frame = 512;
  const double freq = 20.0 * 16000.0 / frame;
  const auto mag = stft_magnitude(sine_wave(freq, 0.8, 4096, 16000.0), frame, 128);
  const std::size_t K = frame / 2 + 1;
  for (std::size_t t = 0; t < mag.dim(0); ++t) {
    double total = 0.0;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double e = mag[t * K + k] * mag[t * K + k];
      total += e;
      if (mag[t * K + k] > mag[t * K + peak]) peak = k;
    }
    EXPECT_EQ(peak, 20u);
    const auto e = [&](std::size_t k) { return mag[t * K + k] * mag[t * K + k]; };
    // Periodic Hann on a bin-centred tone: bin magnitudes N/4, N/8, N/8.
    EXPECT_NEAR(e(20) / total, 2.0 / 3.0, 1e-9);
    EXPECT_GT((e(19) + e(20) + e(21)) / total, 0.9);
  }
}

TEST(Stft, ZeroSignalAndShortSignal) {
  const auto mag = stft_magnitude(constant(0.0, 2048), 256, 64);
  for (double v : mag.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(stft_magnitude(constant(0.1, 100), 256, 64), ParameterError);
  EXPECT_THROW(stft_magnitude(constant(0.1, 1000), 250, 64), ParameterError);
  EXPECT_THROW(stft_magnitude(constant(0.1, 1000), 256, 0), ParameterError);
}

TEST(Stft, ParsevalPerFrame) {
  const auto w = white_noise(0.3, 5000, 4);
  const std::size_t frame = 1024, hop = 256, K = frame / 2 + 1;
  const auto mag = stft_magnitude(w, frame, hop);
  const auto win = hann_window(frame);
  double time_energy = 0.0, freq_energy = 0.0;
  for (std::size_t t = 0; t < mag.dim(0); ++t) {
    for (std::size_t i = 0; i < frame; ++i) {
      const double x = w.samples[t * hop + i] * win[i];
      time_energy += x * x;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double m = mag[t * K + k];
      freq_energy += (k == 0 || k == K - 1 ? 1.0 : 2.0) * m * m / static_cast<double>(frame);
    }
  }
  EXPECT_LT(std::abs(freq_energy - time_energy) / time_energy, 1e-6);
}

TEST(Mel, FilterbankRowsSumToOne) {
  const auto fb = mel_filterbank(64, 1024, 16000.0);
  for (std::size_t m = 0; m < 64; ++m) {
    double s = 0.0;
    for (std::size_t k = 0; k < fb.dim(1); ++k) {
      EXPECT_GE(fb.at(m, k), 0.0);
      s += fb.at(m, k);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(mel_filterbank(514, 1024, 16000.0), ParameterError);
  EXPECT_NO_THROW(mel_filterbank(513, 1024, 16000.0));
}

TEST(Mel, WhiteNoiseProfileIsFlat) {
  const auto mel = mel_spectrogram(white_noise(0.5, 1024 + 9 * 256, 8), 64, 1024, 256);
  ASSERT_EQ(mel.frames(), 10u);
  std::vector<double> avg(64, 0.0);
  for (std::size_t t = 0; t < 10; ++t)
    for (std::size_t f = 0; f < 64; ++f) avg[f] += mel.energies[t * 64 + f] / 10.0;
  double mean = 0.0, var = 0.0;
  for (double v : avg) mean += v / 64.0;
  for (double v : avg) var += (v - mean) * (v - mean) / 63.0;
  EXPECT_LT(std::sqrt(var) / mean, 0.5);
}

TEST(Mel, ZeroSignalAndScaleCovariance) {
  const auto zero = mel_spectrogram(constant(0.0, 4096), 32, 1024, 256);
  for (double v : zero.energies.values()) EXPECT_EQ(v, 0.0);
  auto w = three_tones(4096);
  const auto base = mel_spectrogram(w, 32, 1024, 256);
  for (auto& x : w.samples) x *= 0.25;
  const auto scaled = mel_spectrogram(w, 32, 1024, 256);
  for (std::size_t i = 0; i < base.energies.size(); ++i)
    EXPECT_NEAR(scaled.energies[i], 0.0625 * base.energies[i], 1e-12 * (1.0 + base.energies[i]));
}

TEST(PressureLevel, Examples) {
  EXPECT_EQ(pressure_level_db(constant(1.0, 100)), 0.0);
  EXPECT_NEAR(pressure_level_db(constant(0.1, 100)), -20.0, 1e-12);
  EXPECT_NEAR(pressure_level_db(sine_wave(1000.0, 1.0, 16000, 16000.0)), -3.0103, 1e-4);
  EXPECT_THROW(pressure_level_db(constant(0.0, 100)), UndefinedLevelError);
  EXPECT_THROW(pressure_level_db(Waveform{}), UndefinedLevelError);
}

TEST(PressureLevel, ScalingLaw) {
  const auto w = white_noise(0.2, 3000, 5);
  const double g = pressure_level_db(w);
  for (double c : {0.001, 0.5, 3.0, 17.0}) {
    auto s = w;
    for (auto& x : s.samples) x *= c;
    EXPECT_NEAR(pressure_level_db(s), g + 20.0 * std::log10(c), 1e-12);
  }
}

TEST(GriffinLim, ReconstructsRealSignal) {
  const auto w = three_tones(8192);
  for (auto [frame, hop] : {std::pair<std::size_t, std::size_t>{512, 128}, {1024, 256}}) {
    const auto mag = stft_magnitude(w, frame, hop);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto res = griffin_lim(mag, frame, hop, 60, seed);
      ASSERT_EQ(res.errors.size(), 60u);
      EXPECT_LT(res.errors.back(), 0.1) << frame << " seed " << seed;
      EXPECT_LE(res.errors.back(), res.errors.front());
      for (std::size_t i = 1; i < res.errors.size(); ++i)
        EXPECT_LE(res.errors[i], res.errors[i - 1]) << "iteration " << i;
      EXPECT_NEAR(spectral_convergence(res.samples, mag, frame, hop), res.errors.back(), 1e-12);
    }
  }
}

TEST(GriffinLim, ZeroMagnitudeGivesZeroWaveform) {
  const auto res = griffin_lim(Tensor::zeros({6, 129}), 256, 64, 5, 1);
  for (double x : res.samples) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(griffin_lim(Tensor::zeros({6, 129}), 256, 64, 0, 1), ParameterError);
}

TEST(GriffinLim, MelPathProducesAudio) {
  const auto mel = mel_spectrogram(three_tones(4096), 32, 512, 128);
  const auto audio = griffin_lim(mel, 10, 2);
  EXPECT_EQ(audio.size(), (mel.frames() - 1) * 128 + 512);
  EXPECT_GT(pressure_level_db(audio), -60.0);
}

TEST(Wav, RoundTripAndClipping) {
  const auto path = std::filesystem::temp_directory_path() / "tango_wav_test.wav";
  Waveform w{{0.0, 0.5, -0.5, 0.999, -1.0, 1.7, -2.0}, 16000.0};
  EXPECT_EQ(write_wav(path, w), 2u);
  const auto back = read_wav(path);
  EXPECT_EQ(back.sample_rate, 16000.0);
  ASSERT_EQ(back.size(), w.size());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(back.samples[i], w.samples[i], 1.0 / 32768.0);
  EXPECT_NEAR(back.samples[5], 32767.0 / 32768.0, 1e-12);
  EXPECT_EQ(back.samples[6], -1.0);
  std::filesystem::remove(path);
  EXPECT_THROW(read_wav(path), FormatError);
}
