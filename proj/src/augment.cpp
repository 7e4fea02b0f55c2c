#include "tango/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tango/conditioning.hpp"
#include "tango/errors.hpp"
#include "tango/random.hpp"
#include "tango/wav.hpp"

namespace tango {

double relative_weight(double g1_db, double g2_db) {
  if (!std::isfinite(g1_db) || !std::isfinite(g2_db)) {
    throw ParameterError("pressure levels must be finite");
  }
  // Evaluate through the smaller power of ten so swapped arguments share x
  // and the two weights sum to 1 up to one rounding.
  if (g1_db > g2_db) {
    const double x = std::pow(10.0, (g2_db - g1_db) / 20.0);
    return x / (1.0 + x);
  }
  return 1.0 / (1.0 + std::pow(10.0, (g1_db - g2_db) / 20.0));
}

MixResult mix_pair(const Waveform& x1, const Waveform& x2) {
  if (x1.sample_rate != x2.sample_rate) throw ParameterError("sample rates differ");
  const double g1 = pressure_level_db(x1), g2 = pressure_level_db(x2);
  // q is evaluated from the swapped levels so mix_pair(x2, x1) uses the same
  // two weights in the opposite roles.
  const double p = relative_weight(g1, g2);
  const double q = relative_weight(g2, g1);
  const double norm = std::sqrt(p * p + q * q);
  const std::size_t n = std::max(x1.size(), x2.size());
  Waveform out{std::vector<double>(n, 0.0), x1.sample_rate};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < x1.size() ? x1.samples[i] : 0.0;
    const double b = i < x2.size() ? x2.samples[i] : 0.0;
    out.samples[i] = (p * a + q * b) / norm;
  }
  return {std::move(out), p};
}

std::vector<std::pair<std::size_t, std::size_t>> draw_pairs(std::size_t n,
                                                            std::size_t count,
                                                            std::uint64_t seed) {
  if (n < 2) throw ParameterError("need at least two entries to form pairs");
  if (count < 1) throw ParameterError("pair count must be >= 1");
  const std::size_t total = n * (n - 1) / 2;
  if (count > total) {
    throw ParameterError("requested " + std::to_string(count) + " pairs but only " +
                         std::to_string(total) + " exist");
  }
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(count);
  if (total <= (std::size_t{1} << 22)) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    all.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, total - 1);
      std::swap(all[k], all[pick(rng)]);
      pairs.push_back(all[k]);
    }
  } else {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (pairs.size() < count) {
      auto a = pick(rng), b = pick(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) pairs.emplace_back(a, b);
    }
  }
  std::bernoulli_distribution flip(0.5);
  for (auto& pr : pairs)
    if (flip(rng)) std::swap(pr.first, pr.second);
  return pairs;
}

std::vector<MixedPair> augment_clips(std::span<const Clip> clips,
                                     std::size_t count, std::uint64_t seed) {
  const auto pairs = draw_pairs(clips.size(), count, seed);
  std::vector<MixedPair> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    const auto& a = clips[i];
    const auto& b = clips[j];
    auto mixed = mix_pair(a.audio, b.audio);
    out.push_back({std::move(mixed.audio), concat_captions(a.caption, b.caption),
                   mixed.p, a.id, b.id});
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("manifest line without a tab: " + line);
    std::filesystem::path wav = line.substr(0, tab);
    if (wav.is_relative()) wav = path.parent_path() / wav;
    auto caption = line.substr(tab + 1);
    if (auto extra = caption.find('\t'); extra != std::string::npos) caption.resize(extra);
    entries.push_back({std::move(wav), std::move(caption)});
  }
  return entries;
}

std::vector<MixedPair> augment_manifest(std::span<const ManifestEntry> entries,
                                        std::size_t count, std::uint64_t seed) {
  if (entries.size() < 2) throw ParameterError("augmentation needs at least two entries");
  std::vector<Clip> clips;
  clips.reserve(entries.size());
  for (const auto& e : entries) {
    clips.push_back({e.path.filename().string(), read_wav(e.path), e.caption});
  }
  return augment_clips(clips, count, seed);
}

std::vector<std::size_t> weight_histogram(std::span<const double> p, std::size_t bins) {
  if (bins == 0) throw ParameterError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("weight outside [0, 1]");
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  return counts;
}

}  // namespace tango
