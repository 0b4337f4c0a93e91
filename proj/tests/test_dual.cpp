#include <gtest/gtest.h>

#include <cmath>

#include "hcalc/dual.hpp"
#include "hcalc/error.hpp"

using hcalc::Dual;

namespace {

// f'(x) by central difference with one Richardson step.
template <class F>
double fd(F f, double x, double h = 1e-3) {
  auto c = [&](double s) { return (f(x + s) - f(x - s)) / (2 * s); };
  return (4 * c(h / 2) - c(h)) / 3;
}

}  // namespace

TEST(Dual, Arithmetic) {
  const Dual x{3.0, 1.0};
  EXPECT_EQ((x * x).d, 6.0);
  EXPECT_EQ((x * x).v, 9.0);
  EXPECT_DOUBLE_EQ((Dual{1.0, 0.0} / x).d, -1.0 / 9.0);
  EXPECT_EQ((x - x).d, 0.0);
  EXPECT_EQ(hcalc::ipow(x, 3).d, 27.0);
  EXPECT_DOUBLE_EQ(hcalc::ipow(x, -2).d, -2.0 / 27.0);
  EXPECT_EQ(hcalc::ipow(x, 0).d, 0.0);
}

TEST(Dual, ElementaryDerivativesMatchDifferences) {
  for (double x : {-1.3, -0.2, 0.4, 2.1}) {
    EXPECT_NEAR(sin(Dual{x, 1}).d, fd([](double t) { return std::sin(t); }, x), 1e-9);
    EXPECT_NEAR(cos(Dual{x, 1}).d, fd([](double t) { return std::cos(t); }, x), 1e-9);
    EXPECT_NEAR(exp(Dual{x, 1}).d, fd([](double t) { return std::exp(t); }, x), 1e-8);
    EXPECT_NEAR(abs(Dual{x, 1}).d, x > 0 ? 1.0 : -1.0, 0.0);
    if (x > 0) {
      EXPECT_NEAR(sqrt(Dual{x, 1}).d, fd([](double t) { return std::sqrt(t); }, x), 1e-8);
    }
  }
}

TEST(Dual, KinksThrow) {
  EXPECT_THROW(abs(Dual{0.0, 1.0}), hcalc::NonsmoothPoint);
  EXPECT_THROW(sqrt(Dual{0.0, 1.0}), hcalc::NonsmoothPoint);
  EXPECT_THROW(sign(Dual{0.0, 1.0}), hcalc::NonsmoothPoint);
  EXPECT_THROW(sqrt(Dual{-1.0, 0.0}), hcalc::DomainError);
  EXPECT_EQ(abs(Dual{0.0, 0.0}).v, 0.0);
  EXPECT_EQ(sign(Dual{-2.0, 1.0}).d, 0.0);
}
