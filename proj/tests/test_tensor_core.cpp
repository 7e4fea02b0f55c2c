#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tango/autodiff.hpp"
#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace ad = tango::ad;
using tango::Tensor;

namespace {

Tensor random_tensor(tango::Shape shape, std::uint64_t seed, double scale = 1.0) {
  tango::Rng rng(seed);
  auto v = tango::standard_normal(rng, tango::shape_numel(shape));
  for (auto& x : v) x *= scale;
  return Tensor(std::move(shape), std::move(v));
}

std::vector<std::pair<std::size_t, std::size_t>> all_coords(const std::vector<Tensor>& ps) {
  std::vector<std::pair<std::size_t, std::size_t>> c;
  for (std::size_t p = 0; p < ps.size(); ++p)
    for (std::size_t i = 0; i < ps[p].size(); ++i) c.emplace_back(p, i);
  return c;
}

double fd_error(const ad::Objective& f, const std::vector<Tensor>& ps) {
  return oracle::compare_with_central_differences(f, ps, all_coords(ps)).max_relative_error;
}

}  // namespace

TEST(Tensor, RejectsNonFiniteAndSizeMismatch) {
  EXPECT_THROW(Tensor({2}, {1.0, NAN}), tango::ContractError);
  EXPECT_THROW(Tensor({2}, {1.0, INFINITY}), tango::ContractError);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), tango::ContractError);
}

TEST(Tensor, MatmulAndTranspose) {
  const auto a = Tensor::from_rows({{1, 2}, {3, 4}});
  const auto b = Tensor::from_rows({{5}, {6}});
  const auto c = tango::matmul(a, b);
  EXPECT_EQ(c.shape(), (tango::Shape{2, 1}));
  EXPECT_EQ(c[0], 17.0);
  EXPECT_EQ(c[1], 39.0);
  EXPECT_EQ(tango::transpose(a).at(0, 1), 3.0);
  EXPECT_THROW(tango::matmul(b, b), tango::ContractError);
}

TEST(Autodiff, SquareAtThreeHasGradientSix) {
  const ad::Objective f = [](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(p[0] * p[0]); };
  const std::vector<Tensor> x = {Tensor::scalar(3.0)};
  EXPECT_DOUBLE_EQ(ad::grad(f, x)[0].item(), 6.0);
  const auto report = ad::finite_diff_check(f, x, {.step = 1e-5});
  EXPECT_LT(report.max_relative_error, 1e-8);
}

TEST(Autodiff, SumHasAllOnesGradient) {
  const ad::Objective f = [](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(p[0]); };
  const std::vector<Tensor> x = {random_tensor({2, 3, 2}, 1)};
  const auto g = ad::grad(f, x)[0];
  EXPECT_EQ(g.shape(), x[0].shape());
  for (double v : g.values()) EXPECT_EQ(v, 1.0);
}

TEST(Autodiff, NonScalarOutputIsContractError) {
  ad::Tape tape;
  const auto x = tape.variable(random_tensor({3}, 2));
  const std::vector<ad::Var> wrt = {x};
  EXPECT_THROW(tape.gradient(x, wrt), tango::ContractError);
}

TEST(Autodiff, LeastSquaresMatchesFiniteDifferences) {
  const auto v = random_tensor({4, 1}, 3);
  const auto y = random_tensor({4, 1}, 4);
  const ad::Objective f = [&](ad::Tape& t, std::span<const ad::Var> p) {
    return ad::squared_norm(ad::matmul(p[0], t.constant(v)) - t.constant(y));
  };
  const std::vector<Tensor> w = {random_tensor({4, 4}, 5)};
  EXPECT_LT(fd_error(f, w), 1e-5);
}

TEST(Autodiff, EveryPrimitiveMatchesFiniteDifferences) {
  const std::vector<Tensor> ps = {random_tensor({3, 4}, 10), random_tensor({4, 2}, 11),
                                  random_tensor({4}, 12)};
  const std::vector<std::pair<const char*, ad::Objective>> cases = {
      {"add_broadcast", [](ad::Tape&, std::span<const ad::Var> p) {
         return ad::sum(ad::tanh(p[0] + p[2]));
       }},
      {"sub_mul", [](ad::Tape&, std::span<const ad::Var> p) {
         return ad::sum((p[0] - p[2]) * p[0]);
       }},
      {"matmul_mean", [](ad::Tape&, std::span<const ad::Var> p) {
         return ad::mean(ad::tanh(ad::matmul(p[0], p[1])));
       }},
      {"exp_log", [](ad::Tape&, std::span<const ad::Var> p) {
         return ad::sum(ad::log(ad::exp(p[0]) + ad::exp(p[2])));
       }},
      {"softmax_rows", [](ad::Tape&, std::span<const ad::Var> p) {
         auto s = ad::softmax_rows(p[0]);
         return ad::sum(s * s * p[0]);
       }},
      {"transpose_reshape", [](ad::Tape&, std::span<const ad::Var> p) {
         auto t = ad::reshape(ad::transpose(p[0]), {2, 6});
         return ad::squared_norm(ad::scale(t, 0.5));
       }},
      {"gather", [](ad::Tape&, std::span<const ad::Var> p) {
         auto g = ad::gather(p[0], {0, 5, 5, 11, 3}, {5});
         return ad::sum(g * g * g);
       }},
      {"relu_off_kink", [](ad::Tape&, std::span<const ad::Var> p) {
         return ad::sum(ad::relu(p[0]) * p[0]);
       }},
  };
  for (const auto& [name, f] : cases) {
    EXPECT_LT(fd_error(f, ps), 1e-5) << name;
  }
}

TEST(Autodiff, ReluDerivativeAtZeroIsZero) {
  const ad::Objective f = [](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::relu(p[0])); };
  const std::vector<Tensor> x = {Tensor({3}, {-1.0, 0.0, 2.0})};
  const auto g = ad::grad(f, x)[0];
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 1.0);
}

TEST(Autodiff, GradientOfSumIsSumOfGradients) {
  const std::vector<Tensor> ps = {random_tensor({3, 3}, 20)};
  const ad::Objective fa = [](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::tanh(p[0])); };
  const ad::Objective fb = [](ad::Tape&, std::span<const ad::Var> p) { return ad::squared_norm(p[0]); };
  const ad::Objective fab = [](ad::Tape&, std::span<const ad::Var> p) {
    return ad::sum(ad::tanh(p[0])) + ad::squared_norm(p[0]);
  };
  const auto ga = ad::grad(fa, ps)[0], gb = ad::grad(fb, ps)[0], gab = ad::grad(fab, ps)[0];
  for (std::size_t i = 0; i < gab.size(); ++i) EXPECT_NEAR(gab[i], ga[i] + gb[i], 1e-14);
}

TEST(Autodiff, OpsDoNotMutateInputs) {
  ad::Tape tape;
  const auto x0 = random_tensor({2, 2}, 30);
  const auto x = tape.variable(x0);
  const auto y = ad::exp(x) * x + ad::transpose(x);
  const std::vector<ad::Var> wrt = {x};
  tape.gradient(ad::sum(y), wrt);
  EXPECT_EQ(x.value(), x0);
}

TEST(Autodiff, FiniteDiffCheckSubsetIsSeeded) {
  const ad::Objective f = [](ad::Tape&, std::span<const ad::Var> p) {
    return ad::sum(ad::tanh(p[0]) * p[0]);
  };
  const std::vector<Tensor> ps = {random_tensor({50}, 40)};
  const auto r = ad::finite_diff_check(f, ps, {.max_coordinates = 10, .seed = 7});
  EXPECT_EQ(r.coordinates_checked, 10u);
  EXPECT_LT(r.max_relative_error, 1e-6);
}
