#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "tango/errors.hpp"
#include "tango/schedule.hpp"

using tango::GammaConfig;
using tango::GammaMode;
using tango::NoiseSchedule;

TEST(Schedule, TwoStepHandComputedAlphaBar) {
  const auto s = NoiseSchedule::linear(2, 0.1, 0.2);
  EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
}

TEST(Schedule, SingleStepIsDegenerate) {
  const auto s = NoiseSchedule::linear(1, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.5);
  EXPECT_EQ(s.posterior_variance(1), 0.0);
}

TEST(Schedule, DefaultTerminalAlphaBarIsNearZero) {
  const auto s = NoiseSchedule::default_schedule();
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_LT(s.alpha_bar(1000), 5e-5);
}

TEST(Schedule, RejectsInvalidParameters) {
  EXPECT_THROW(NoiseSchedule::linear(0, 1e-4, 0.02), tango::ParameterError);
  EXPECT_THROW(NoiseSchedule::linear(10, 0.0, 0.02), tango::ParameterError);
  EXPECT_THROW(NoiseSchedule::linear(10, 0.03, 0.02), tango::ParameterError);
  EXPECT_THROW(NoiseSchedule::linear(10, 1e-4, 1.0), tango::ParameterError);
}

TEST(Schedule, IndexOutOfRange) {
  const auto s = NoiseSchedule::linear(5, 1e-3, 0.1);
  EXPECT_THROW(s.beta(0), tango::IndexError);
  EXPECT_THROW(s.beta(6), tango::IndexError);
  EXPECT_THROW(tango::snr_weight(s, 6, std::nullopt), tango::IndexError);
}

TEST(Schedule, InvariantsHoldOnDefault) {
  const auto s = NoiseSchedule::default_schedule();
  const auto ref = oracle::alpha_bars(oracle::linear_betas(1000, 1e-4, 0.02));
  for (int n = 1; n <= s.steps(); ++n) {
    EXPECT_LT(std::abs(s.alpha_bar(n) - ref[static_cast<std::size_t>(n - 1)]), 1e-12);
    EXPECT_LE(s.posterior_variance(n), s.beta(n));
    const double expected_var = (1.0 - (n == 1 ? 1.0 : ref[static_cast<std::size_t>(n - 2)])) /
                                (1.0 - ref[static_cast<std::size_t>(n - 1)]) * s.beta(n);
    EXPECT_NEAR(s.posterior_variance(n), expected_var, 1e-15);
    if (n > 1) {
      EXPECT_LT(s.beta(n - 1), s.beta(n));
      EXPECT_LT(s.alpha_bar(n), s.alpha_bar(n - 1));
      EXPECT_LT(s.snr(n), s.snr(n - 1));
      EXPECT_LT(s.gamma(n), s.gamma(n - 1));
    }
  }
  EXPECT_EQ(s.posterior_variance(1), 0.0);
}

TEST(Schedule, SnrWeightExamples) {
  // beta = 0.5 on one step gives alpha_bar = 0.5; beta = 0.1 gives 0.9.
  const auto half = NoiseSchedule::linear(1, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(tango::snr_weight(half, 1, std::nullopt), 1.0);
  const auto s = NoiseSchedule::linear(1, 0.1, 0.1);
  EXPECT_NEAR(tango::snr_weight(s, 1, std::nullopt), 9.0, 1e-12);
  EXPECT_NEAR(tango::snr_weight(s, 1, 5.0), 5.0 / 9.0, 1e-12);
}

TEST(Schedule, GammaModes) {
  const auto snr = NoiseSchedule::linear(1, 0.1, 0.1, {GammaMode::kSnr, 5.0});
  const auto clamped = NoiseSchedule::linear(1, 0.1, 0.1, {GammaMode::kMinSnr, 5.0});
  const auto uniform = NoiseSchedule::linear(1, 0.1, 0.1, {GammaMode::kUniform, 5.0});
  EXPECT_NEAR(snr.gamma(1), 9.0, 1e-12);
  EXPECT_NEAR(clamped.gamma(1), 5.0 / 9.0, 1e-12);
  EXPECT_EQ(uniform.gamma(1), 1.0);
  EXPECT_EQ(tango::parse_gamma_mode("min_snr"), GammaMode::kMinSnr);
  EXPECT_THROW(tango::parse_gamma_mode("cosine"), tango::ParameterError);
}

TEST(Schedule, ConfigRoundTrip) {
  const auto s = NoiseSchedule::linear(37, 2e-4, 0.03, {GammaMode::kMinSnr, 3.5});
  const auto text = s.to_config().to_string();
  const auto back = NoiseSchedule::from_config(tango::KeyValueConfig::parse(text));
  EXPECT_EQ(back.betas(), s.betas());
  EXPECT_EQ(back.gamma_config().mode, GammaMode::kMinSnr);
  EXPECT_EQ(back.gamma_config().clamp, 3.5);
  EXPECT_EQ(back.fingerprint(), s.fingerprint());
  EXPECT_NE(NoiseSchedule::linear(37, 2e-4, 0.031).fingerprint(), s.fingerprint());
}
