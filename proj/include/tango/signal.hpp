#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "tango/tensor.hpp"

namespace tango {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  std::size_t size() const { return samples.size(); }
};

// T x F nonnegative mel energies plus the framing that produced them.
struct MelSpectrogram {
  Tensor energies;  // {frames, bins}
  std::size_t frame = 1024;
  std::size_t hop = 256;
  double sample_rate = 16000.0;

  std::size_t frames() const { return energies.dim(0); }
  std::size_t bins() const { return energies.dim(1); }
};

using ComplexFrames = std::vector<std::vector<std::complex<double>>>;

// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

std::vector<double> hann_window(std::size_t frame);

// One-sided spectra (frame/2 + 1 bins) of Hann-windowed frames at `hop`, no
// padding: T = 1 + (len - frame) / hop.
ComplexFrames stft(std::span<const double> signal, std::size_t frame, std::size_t hop);

// T x (frame/2 + 1) magnitudes.
Tensor stft_magnitude(const Waveform& w, std::size_t frame, std::size_t hop);

// Least-squares inverse of stft(): windowed overlap-add normalized by the
// summed squared window. Output length (T - 1) * hop + frame.
std::vector<double> istft(const ComplexFrames& frames, std::size_t frame,
                          std::size_t hop);

// Triangular mel filters (HTK mel scale) spanning 0..sample_rate/2, each row
// normalized to unit sum over FFT bins. {bins, frame/2 + 1}.
Tensor mel_filterbank(std::size_t bins, std::size_t frame, double sample_rate);

MelSpectrogram mel_spectrogram(const Waveform& w, std::size_t bins,
                               std::size_t frame = 1024, std::size_t hop = 256);

// Approximate linear magnitudes from mel energies by spreading each band's
// mean power back over the FFT bins it covers.
Tensor mel_to_magnitude(const MelSpectrogram& mel);

// 20 log10(RMS) relative to digital full scale 1.0.
double pressure_level_db(const Waveform& w);

struct GriffinLimResult {
  std::vector<double> samples;
  // Spectral convergence after each iteration:
  // ||(|STFT(x)| - M)||_F / ||M||_F, counting interior bins twice.
  std::vector<double> errors;
};

// Phase reconstruction from a T x (frame/2 + 1) magnitude matrix, starting
// from seeded random phase. Momentum-accelerated updates are accepted only
// when they do not raise the error, else the plain projection is tried, so
// errors never increase.
GriffinLimResult griffin_lim(const Tensor& magnitude, std::size_t frame,
                             std::size_t hop, int iterations, std::uint64_t seed);

Waveform griffin_lim(const MelSpectrogram& mel, int iterations, std::uint64_t seed);

// Spectral convergence of `signal` against a target magnitude, using the
// same weighting as GriffinLimResult::errors.
double spectral_convergence(std::span<const double> signal, const Tensor& magnitude,
                            std::size_t frame, std::size_t hop);

// Synthetic test signals.
Waveform sine_wave(double frequency, double amplitude, std::size_t length,
                   double sample_rate = 16000.0);
Waveform white_noise(double rms, std::size_t length, std::uint64_t seed,
                     double sample_rate = 16000.0);

}  // namespace tango
