#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace hcalc;

namespace {

double ev(const Expr& e, std::vector<double> x) { return e.eval<double>(std::span<const double>(x)); }

}  // namespace

TEST(Parse, Examples) {
  const auto e = parse_expr("eta1 + 2*tau", {"eta1", "tau"});
  EXPECT_EQ(ev(e, {1, 3}), 7.0);
  const auto z = parse_expr("0", {"x"});
  EXPECT_TRUE(z.is_constant());
  EXPECT_EQ(ev(z, {5}), 0.0);
  const auto s = parse_expr("sin(x1)*y1", {"x1", "y1", "t"});
  EXPECT_EQ(ev(s, {0, 5, 1}), 0.0);
  EXPECT_EQ(s.free_vars(), (std::set<int>{0, 1}));
}

TEST(Parse, Precedence) {
  const std::vector<std::string> v{"a", "b"};
  EXPECT_EQ(ev(parse_expr("1 + 2*3", v), {0, 0}), 7.0);
  EXPECT_EQ(ev(parse_expr("2*a^2", v), {3, 0}), 18.0);
  EXPECT_EQ(ev(parse_expr("-a^2", v), {3, 0}), -9.0);
  EXPECT_EQ(ev(parse_expr("a - b - 1", v), {5, 2}), 2.0);
  EXPECT_EQ(ev(parse_expr("a / b / 2", v), {8, 2}), 2.0);
  EXPECT_EQ(ev(parse_expr("(a + b)^3", v), {1, 1}), 8.0);
  EXPECT_EQ(ev(parse_expr("a^-1", v), {4, 0}), 0.25);
  EXPECT_DOUBLE_EQ(ev(parse_expr("exp(a) + cos(b) + sqrt(4) + abs(-2)", v), {0, 0}), 6.0);
  EXPECT_EQ(ev(parse_expr("sign(a)", v), {-3, 0}), -1.0);
  EXPECT_EQ(ev(parse_expr("1.5e1", v), {0, 0}), 15.0);
}

TEST(Parse, Errors) {
  const std::vector<std::string> v{"x1", "y1", "t"};
  EXPECT_THROW(parse_expr("", v), ParseError);
  EXPECT_THROW(parse_expr("   ", v), ParseError);
  try {
    parse_expr("x1 + eta1", v);
    FAIL();
  } catch (const UnknownIdentifier& e) {
    EXPECT_EQ(e.name(), "eta1");
    EXPECT_EQ(e.offset(), 5u);
  }
  try {
    parse_expr("x1 + * y1", v);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse_expr("(x1 + y1", v), ParseError);
  EXPECT_THROW(parse_expr("x1 y1", v), ParseError);
  EXPECT_THROW(parse_expr("x1^1.5", v), ParseError);
  EXPECT_THROW(parse_expr("foo(x1)", v), ParseError);
}

TEST(Expr, Combinators) {
  const std::vector<std::string> v{"x", "y"};
  const auto x = Expr::variable(0, v), y = Expr::variable(1, v);
  EXPECT_EQ(ev(x * y + x - y / Expr::constant(2, v), {3, 4}), 13.0);
  EXPECT_EQ(ev(negate(x), {3, 0}), -3.0);
  // Substitute x -> y + 1, y -> 2y.
  const auto s = substitute(x * y, {y + Expr::constant(1, v), y * Expr::constant(2, v)});
  EXPECT_EQ(ev(s, {0, 3}), 24.0);
  EXPECT_THROW(Expr::variable(2, v), DomainError);
  EXPECT_TRUE(parse_expr("abs(x)", v).has_kinks());
  EXPECT_FALSE(parse_expr("sin(x)", v).has_kinks());
}

TEST(Expr, PrintReparsesToSameFunction) {
  std::mt19937_64 g(21);
  const std::vector<std::string> v{"v2", "eta1", "w2", "tau"};
  const std::vector<std::string> extra{"sin(eta1 - tau)", "exp(-w2^2)", "cos(v2)/(2 + tau^2)", "-(tau - 1)^3",
                                       "abs(eta1) * sqrt(1 + v2^2)"};
  for (int i = 0; i < 30; ++i) {
    std::string text = oracle::random_poly(g, v, 5, 3);
    text += " + " + extra[static_cast<std::size_t>(i) % extra.size()];
    const auto e = parse_expr(text, v);
    const auto back = parse_expr(e.to_string(), v);
    for (int p = 0; p < 100; ++p) {
      const auto x = oracle::random_vec(g, 4);
      EXPECT_NEAR(ev(back, x), ev(e, x), 1e-12 * (1 + std::fabs(ev(e, x)))) << text;
    }
  }
}

TEST(Expr, WrongArity) {
  const auto e = parse_expr("x", {"x"});
  EXPECT_THROW(ev(e, {1, 2}), DimensionError);
}
