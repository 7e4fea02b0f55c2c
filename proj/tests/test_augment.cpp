#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "tango/augment.hpp"
#include "tango/errors.hpp"
#include "tango/random.hpp"
#include "tango/wav.hpp"

using namespace tango;

namespace {

double rms(const Waveform& w) {
  double s = 0.0;
  for (double x : w.samples) s += x * x;
  return std::sqrt(s / static_cast<double>(w.size()));
}

Waveform scaled_noise(double level_db, std::size_t n, std::uint64_t seed) {
  return white_noise(std::pow(10.0, level_db / 20.0), n, seed);
}

}  // namespace

TEST(RelativeWeight, Examples) {
  EXPECT_EQ(relative_weight(-12.0, -12.0), 0.5);
  EXPECT_NEAR(relative_weight(0.0, -20.0), 1.0 / 11.0, 1e-15);
  EXPECT_NEAR(relative_weight(-20.0, 0.0), 10.0 / 11.0, 1e-15);
  EXPECT_THROW(relative_weight(NAN, 0.0), ParameterError);
}

TEST(RelativeWeight, Complementary) {
  Rng rng(1);
  std::uniform_real_distribution<double> g(-80.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = g(rng), b = g(rng);
    EXPECT_NEAR(relative_weight(a, b) + relative_weight(b, a), 1.0, 1e-15);
  }
}

TEST(MixPair, EqualLevelsAverageOverRootTwo) {
  const auto x1 = scaled_noise(-10.0, 1000, 1);
  auto x2 = scaled_noise(-10.0, 1000, 2);
  const double gain = rms(x1) / rms(x2);
  for (auto& v : x2.samples) v *= gain;
  const auto m = mix_pair(x1, x2);
  EXPECT_NEAR(m.p, 0.5, 1e-12);
  for (std::size_t i = 0; i < 1000; ++i)
    EXPECT_NEAR(m.audio.samples[i], (x1.samples[i] + x2.samples[i]) / std::sqrt(2.0), 1e-12);
}

TEST(MixPair, SelfMixIsRootTwoGain) {
  const auto x = sine_wave(300.0, 0.4, 800, 16000.0);
  const auto m = mix_pair(x, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(m.audio.samples[i], std::sqrt(2.0) * x.samples[i], 1e-12);
}

TEST(MixPair, UncorrelatedUnitRmsStaysUnitRms) {
  Rng rng(5);
  std::uniform_real_distribution<double> level(-20.0, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    auto x1 = white_noise(1.0, 16000, 100 + trial);
    auto x2 = white_noise(1.0, 16000, 200 + trial);
    // Unit RMS, but offset levels through an explicit p.
    const double p = relative_weight(level(rng), level(rng));
    Waveform mixed{std::vector<double>(16000), 16000.0};
    const double norm = std::sqrt(p * p + (1 - p) * (1 - p));
    for (std::size_t i = 0; i < 16000; ++i)
      mixed.samples[i] = (p * x1.samples[i] + (1 - p) * x2.samples[i]) / norm;
    EXPECT_NEAR(rms(mixed), 1.0, 0.05);
    EXPECT_NEAR(rms(mix_pair(x1, x2).audio), 1.0, 0.05);
  }
}

TEST(MixPair, SwapSymmetryZeroPaddingAndBound) {
  const auto a = scaled_noise(-3.0, 1200, 7);
  const auto b = sine_wave(440.0, 0.05, 700, 16000.0);
  const auto ab = mix_pair(a, b), ba = mix_pair(b, a);
  ASSERT_EQ(ab.audio.size(), 1200u);
  ASSERT_EQ(ba.audio.size(), 1200u);
  EXPECT_NEAR(ab.p + ba.p, 1.0, 1e-15);
  double amax = 0.0, bmax = 0.0;
  for (double x : a.samples) amax = std::max(amax, std::abs(x));
  for (double x : b.samples) bmax = std::max(bmax, std::abs(x));
  const double bound = (amax + bmax) / std::sqrt(ab.p * ab.p + (1 - ab.p) * (1 - ab.p));
  const double q = 1.0 - ab.p;
  const double norm = std::sqrt(ab.p * ab.p + q * q);
  for (std::size_t i = 0; i < 1200; ++i) {
    EXPECT_NEAR(ab.audio.samples[i], ba.audio.samples[i], 1e-12);
    EXPECT_TRUE(std::isfinite(ab.audio.samples[i]));
    EXPECT_LE(std::abs(ab.audio.samples[i]), bound);
    if (i >= 700) EXPECT_NEAR(ab.audio.samples[i], ab.p * a.samples[i] / norm, 1e-15);
  }
}

TEST(MixPair, Errors) {
  const auto a = sine_wave(100.0, 0.5, 500, 16000.0);
  EXPECT_THROW(mix_pair(a, sine_wave(100.0, 0.5, 500, 8000.0)), ParameterError);
  EXPECT_THROW(mix_pair(a, Waveform{std::vector<double>(500, 0.0), 16000.0}), UndefinedLevelError);
}

TEST(DrawPairs, DistinctDeterministicAndBounded) {
  const auto p1 = draw_pairs(2, 1, 3);
  ASSERT_EQ(p1.size(), 1u);
  EXPECT_EQ(std::min(p1[0].first, p1[0].second), 0u);
  EXPECT_EQ(std::max(p1[0].first, p1[0].second), 1u);
  const auto a = draw_pairs(30, 200, 9), b = draw_pairs(30, 200, 9);
  EXPECT_EQ(a, b);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [i, j] : a) {
    EXPECT_NE(i, j);
    EXPECT_TRUE(seen.insert({std::min(i, j), std::max(i, j)}).second);
  }
  EXPECT_THROW(draw_pairs(4, 7, 1), ParameterError);
  EXPECT_THROW(draw_pairs(1, 1, 1), ParameterError);
  EXPECT_THROW(draw_pairs(4, 0, 1), ParameterError);
}

TEST(AugmentClips, SymmetricLevelCorpusGivesSymmetricHistogram) {
  Rng rng(12);
  std::uniform_real_distribution<double> level(-30.0, 0.0);
  std::vector<Clip> clips;
  for (int i = 0; i < 100; ++i) {
    clips.push_back({"c" + std::to_string(i), scaled_noise(level(rng), 400, 1000 + i),
                     "clip " + std::to_string(i)});
  }
  const std::size_t count = 4000;
  const auto mixed = augment_clips(clips, count, 77);
  ASSERT_EQ(mixed.size(), count);
  std::vector<double> ps;
  for (const auto& m : mixed) {
    ps.push_back(m.p);
    EXPECT_GT(m.p, 0.0);
    EXPECT_LT(m.p, 1.0);
  }
  const auto h = weight_histogram(ps, 20);
  ASSERT_EQ(h.size(), 20u);
  std::size_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, count);
  // Mirror bins b and 19-b have equal expectation; their difference has
  // variance at most n (p_b + p_mirror).
  for (std::size_t b = 0; b < 10; ++b) {
    const double diff = static_cast<double>(h[b]) - static_cast<double>(h[19 - b]);
    const double sd = std::sqrt(static_cast<double>(h[b] + h[19 - b]));
    EXPECT_LE(std::abs(diff), 3.0 * std::max(sd, 1.0)) << "bin " << b;
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& m = mixed[i];
    EXPECT_EQ(m.caption, "clip " + m.source_a.substr(1) + " clip " + m.source_b.substr(1));
  }
}

TEST(AugmentManifest, ReadsWavsAndJoinsCaptions) {
  const auto dir = std::filesystem::temp_directory_path() / "tango_manifest_test";
  std::filesystem::create_directories(dir);
  write_wav(dir / "a.wav", sine_wave(440.0, 0.5, 1600, 16000.0));
  write_wav(dir / "b.wav", white_noise(0.05, 2000, 3));
  {
    std::ofstream m(dir / "list.tsv");
    m << "# comment\n" << "a.wav\ta tone hums\n" << "b.wav\train falls\n";
  }
  const auto entries = read_manifest(dir / "list.tsv");
  ASSERT_EQ(entries.size(), 2u);
  const auto mixed = augment_manifest(entries, 1, 5);
  ASSERT_EQ(mixed.size(), 1u);
  const auto& m = mixed[0];
  EXPECT_EQ(m.audio.size(), 2000u);
  const bool a_first = m.source_a == "a.wav";
  EXPECT_EQ(m.caption, a_first ? "a tone hums rain falls" : "rain falls a tone hums");
  EXPECT_EQ(augment_manifest(entries, 1, 5)[0].audio.samples, m.audio.samples);
  EXPECT_THROW(augment_manifest(std::span(entries).first(1), 1, 5), ParameterError);
  std::filesystem::remove_all(dir);
}
