#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace hcalc;

namespace {

double at(const ScalarField& f, std::vector<double> x) { return f(x); }

}  // namespace

TEST(ScalarField, Constant) {
  const auto c = ScalarField::constant(2.5, 3);
  EXPECT_EQ(at(c, {1, -7, 3}), 2.5);
  EXPECT_EQ(c.partial(1, std::vector<double>{1, -7, 3}), 0.0);
}

TEST(ScalarField, ExpressionValuesAndPartials) {
  const auto f = ScalarField::parse("eta1^2", {"eta1"});
  EXPECT_EQ(at(f, {3}), 9.0);
  const auto lin = ScalarField::parse("eta1 + 2*tau", {"eta1", "tau"});
  for (double a : {-2.0, 0.0, 5.0}) EXPECT_EQ(lin.partial(0, std::vector<double>{a, a * a}), 1.0);
  const auto sq = ScalarField::parse("x1^2", {"x1"});
  EXPECT_EQ(sq.partial(0, std::vector<double>{3}), 6.0);
}

TEST(ScalarField, PartialAtKinkThrows) {
  const auto f = ScalarField::parse("abs(tau)", {"eta1", "tau"});
  EXPECT_THROW(f.partial(1, std::vector<double>{0.3, 0.0}), NonsmoothPoint);
  EXPECT_EQ(f.partial(1, std::vector<double>{0.3, -1.0}), -1.0);
  const auto g = ScalarField::parse("sqrt(abs(tau))", {"tau"});
  EXPECT_THROW(g.partial(0, std::vector<double>{0.0}), NonsmoothPoint);
}

TEST(ScalarField, GridInterpolation) {
  const auto g = ScalarField::from_grid(Box({0}, {1}), {2}, {0, 1});
  EXPECT_EQ(at(g, {0.5}), 0.5);
  EXPECT_THROW(at(g, {1.5}), DomainError);
  EXPECT_EQ(g.smoothness(), Smoothness::ContinuousOnly);
  EXPECT_THROW(ScalarField::from_grid(Box({0}, {1}), {1}, {0}), DomainError);
}

TEST(ScalarField, GridReproducesMultilinear) {
  const Box box({-1, 0, 2}, {1, 3, 2.5});
  auto f = [](std::span<const double> x) {
    return 0.5 + x[0] - 2 * x[1] + 3 * x[0] * x[1] - x[1] * x[2] + 0.25 * x[0] * x[1] * x[2];
  };
  const auto src = ScalarField::from_function(3, f);
  const auto grid = ScalarField::sample_grid(src, box, {3, 5, 2});
  std::mt19937_64 g(31);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(3);
    for (std::size_t a = 0; a < 3; ++a) x[a] = box.lo(a) + box.side(a) * oracle::random_vec(g, 1, 0, 1)[0];
    EXPECT_NEAR(grid(x), f(x), 1e-12);
  }
}

TEST(ScalarField, GridDerivativeUsesDifferences) {
  const Box box({0, 0}, {1, 1});
  const auto src = ScalarField::parse("x*y + 2*x", {"x", "y"});
  const auto grid = ScalarField::sample_grid(src, box, {11, 11});
  EXPECT_FALSE(grid.has_dual());
  EXPECT_NEAR(grid.partial(0, std::vector<double>{0.5, 0.5}, 1e-2), 2.5, 1e-10);
  // One-sided stencil at the boundary.
  EXPECT_NEAR(grid.partial(0, std::vector<double>{0.0, 0.3}, 1e-2), 2.3, 1e-10);
}

TEST(ScalarField, DualMatchesFiniteDifference) {
  std::mt19937_64 g(32);
  const std::vector<std::string> v{"v2", "eta1", "w2", "tau"};
  const std::vector<std::string> tails{"sin(eta1*tau)", "exp(w2/2)", "cos(v2 - tau)", "1/(3 + eta1^2)"};
  for (int i = 0; i < 40; ++i) {
    const auto text = oracle::random_poly(g, v, 5, 3) + " + " + tails[static_cast<std::size_t>(i) % 4];
    const auto f = ScalarField::parse(text, v);
    for (int p = 0; p < 25; ++p) {
      const auto x = oracle::random_vec(g, 4);
      const auto dir = oracle::random_vec(g, 4);
      const double exact = f.directional(x, dir);
      const double approx = f.finite_difference(x, dir, 1e-4);
      EXPECT_NEAR(exact, approx, 1e-6 * (1 + std::fabs(exact))) << text;
    }
  }
}

TEST(ScalarField, FromFunctionWithoutDualFallsBack) {
  const auto f = ScalarField::from_function(1, [](std::span<const double> x) { return std::sin(x[0]); });
  EXPECT_NEAR(f.partial(0, std::vector<double>{0.4}), std::cos(0.4), 1e-9);
}
