#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tango/signal.hpp"

namespace tango {

// Weight of x1 when mixing with x2 given their pressure levels in dB:
// p = 1 / (1 + 10^((G1 - G2) / 20)). The louder clip gets the smaller weight.
double relative_weight(double g1_db, double g2_db);

struct MixResult {
  Waveform audio;
  double p = 0.5;  // weight applied to x1
};

// (p x1 + (1 - p) x2) / sqrt(p^2 + (1 - p)^2), the shorter clip zero-padded
// at the tail. Output is not re-clipped.
MixResult mix_pair(const Waveform& x1, const Waveform& x2);

struct Clip {
  std::string id;
  Waveform audio;
  std::string caption;
};

struct MixedPair {
  Waveform audio;
  std::string caption;
  double p = 0.5;
  std::string source_a;  // x1
  std::string source_b;  // x2
};

// `count` distinct unordered index pairs from n items, each oriented at
// random. Deterministic in seed.
std::vector<std::pair<std::size_t, std::size_t>> draw_pairs(std::size_t n,
                                                            std::size_t count,
                                                            std::uint64_t seed);

std::vector<MixedPair> augment_clips(std::span<const Clip> clips,
                                     std::size_t count, std::uint64_t seed);

// "wav-path<TAB>caption" lines. Relative paths resolve against the manifest's
// directory.
struct ManifestEntry {
  std::filesystem::path path;
  std::string caption;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::vector<MixedPair> augment_manifest(std::span<const ManifestEntry> entries,
                                        std::size_t count, std::uint64_t seed);

// Counts of p over `bins` equal-width bins on [0, 1].
std::vector<std::size_t> weight_histogram(std::span<const double> p,
                                          std::size_t bins = 20);

}  // namespace tango
