#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace hcalc;

namespace {

Box cube(std::size_t dim, double r = 1.0) {
  return Box(std::vector<double>(dim, -r), std::vector<double>(dim, r));
}

double max_abs(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

GraphFunction random_phi(std::mt19937_64& g, const Splitting& s, double r = 1.0) {
  std::vector<std::string> comps;
  for (int i = 0; i < s.k(); ++i) comps.push_back(oracle::random_poly(g, s.base_vars(), 5, 3));
  return GraphFunction::parse(s, comps, cube(s.base_dim(), r));
}

}  // namespace

TEST(WField, Examples) {
  const Splitting s11(1, 1);
  const auto eta = GraphFunction::parse(s11, {"eta1"}, cube(2, 3));
  EXPECT_EQ(w_field(eta, 0, BasePoint{{}, {2}, {}, 0}), (std::vector<double>{1, 2}));
  const auto zero = GraphFunction::constant(Splitting(2, 2), {0, 0}, cube(3, 3));
  EXPECT_EQ(w_field(zero, 1, BasePoint{{}, {0.5, 1}, {}, 2}), (std::vector<double>{0, 1, 0}));
  const Splitting s21(2, 1);
  const auto z21 = GraphFunction::constant(s21, {0}, cube(4, 5));
  EXPECT_EQ(w_field(z21, 0, BasePoint{{0}, {0}, {4}, 0}), (std::vector<double>{1, 0, 0, -2}));
  EXPECT_THROW(w_field(z21, 3, BasePoint{{0}, {0}, {4}, 0}), DomainError);
}

TEST(ExpMap, Examples) {
  const Splitting s11(1, 1);
  const auto c = GraphFunction::constant(s11, {0.7}, cube(2, 3));
  const BasePoint b{{}, {0.2}, {}, -0.1};
  const auto e = exp_map(c, 0, b, 0.5);
  EXPECT_NEAR(e.eta[0], 0.7, 1e-12);
  EXPECT_NEAR(e.tau, -0.1 + 0.35, 1e-12);
  EXPECT_EQ(exp_map(c, 0, b, 0.0), b);

  const Splitting s21(2, 1);
  const auto z = GraphFunction::constant(s21, {0}, cube(4, 3));
  const auto e2 = exp_map(z, 0, BasePoint{{0}, {0}, {1}, 0}, 1.0);
  EXPECT_NEAR(e2.v[0], 1.0, 1e-12);
  EXPECT_NEAR(e2.w[0], 1.0, 1e-12);
  EXPECT_NEAR(e2.tau, -0.5, 1e-12);
  EXPECT_NEAR(e2.eta[0], 0.0, 1e-12);
}

TEST(ExpMap, LeavingDomainReportsExitTime) {
  const Splitting s11(1, 1);
  const auto c = GraphFunction::constant(s11, {0.0}, cube(2, 1));
  try {
    exp_map(c, 0, BasePoint{{}, {0.5}, {}, 0}, 1.0);
    FAIL();
  } catch (const CurveExit& e) {
    EXPECT_GT(e.exit_time(), 0.45);
    EXPECT_LE(e.exit_time(), 0.5 + 1e-12);
  }
}

// Outer fields have closed-form curves and move at unit d_phi speed.
TEST(ExpMap, OuterFieldsClosedFormAndUnitSpeed) {
  std::mt19937_64 g(51);
  for (int n = 2; n <= 3; ++n)
    for (int k = 1; k < n; ++k) {
      const Splitting s(n, k);
      const auto phi = random_phi(g, s, 3.0);
      const int o = s.outer();
      for (int t = 0; t < 10; ++t) {
        const auto bf = oracle::random_vec(g, s.base_dim(), -0.5, 0.5);
        const auto b = BasePoint::from_flat(s, bf);
        const double sv = oracle::random_vec(g, 1, -0.8, 0.8)[0];
        for (int j = 0; j < 2 * n - k; ++j) {
          if (j >= o && j < n) continue;
          const auto e = exp_map(phi, static_cast<std::size_t>(j), b, sv).flat();
          auto expect = bf;
          expect[static_cast<std::size_t>(j)] += sv;
          expect.back() += j < o ? -0.5 * sv * bf[static_cast<std::size_t>(n + j)]
                                 : 0.5 * sv * bf[static_cast<std::size_t>(j - n)];
          for (std::size_t c = 0; c < expect.size(); ++c) EXPECT_NEAR(e[c], expect[c], 1e-10);
          const double d = graph_dist(phi, BasePoint::from_flat(s, e), b);
          EXPECT_NEAR(d, std::abs(sv), 1e-10);
        }
      }
    }
}

// Middle fields: d_phi(gamma(s), gamma(0)) <= C2 |s| with a finite C2.
TEST(ExpMap, MiddleFieldsLipschitzInTime) {
  std::mt19937_64 g(52);
  const Splitting s(2, 2);
  const auto phi = random_phi(g, s, 3.0);
  double c2 = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto bf = oracle::random_vec(g, 3, -0.5, 0.5);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto curve = exp_curve(phi, j, bf, 0.5, 16);
      for (std::size_t q = 1; q < curve.size(); ++q)
        c2 = std::max(c2, graph_dist_flat(phi, curve[q], bf) / (0.5 * q / 16.0));
    }
  }
  std::printf("middle-field C2 estimate %.4f\n", c2);
  EXPECT_TRUE(std::isfinite(c2));
  EXPECT_LT(c2, 1e3);
}

TEST(IntrinsicPartial, Examples) {
  const Splitting s11(1, 1);
  const auto eta = GraphFunction::parse(s11, {"eta1"}, cube(2));
  for (double x : {-0.5, 0.0, 0.4}) {
    EXPECT_NEAR(intrinsic_partial(eta, 0, 0, BasePoint{{}, {x}, {}, x / 2}).value, 1.0, 1e-10);
  }
  const auto c = GraphFunction::constant(Splitting(2, 1), {3.0}, cube(4));
  EXPECT_NEAR(max_abs(intrinsic_jacobian(c, BasePoint{{0.1}, {0.2}, {0.3}, 0.4})), 0.0, 1e-12);
  const auto v2 = GraphFunction::parse(Splitting(2, 1), {"v2"}, cube(4));
  const auto J = intrinsic_jacobian(v2, BasePoint{{0.1}, {0.2}, {-0.3}, 0.4});
  ASSERT_EQ(J.rows(), 1);
  ASSERT_EQ(J.cols(), 3);
  EXPECT_NEAR(J(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(J(0, 1), 0.0, 1e-10);
  EXPECT_NEAR(J(0, 2), 0.0, 1e-10);
  const auto c22 = GraphFunction::constant(Splitting(2, 2), {1.0, -2.0}, cube(3));
  const auto J22 = intrinsic_jacobian(c22, BasePoint{{}, {0.1, 0.2}, {}, 0.3});
  EXPECT_EQ(J22.rows(), 2);
  EXPECT_EQ(J22.cols(), 2);
  EXPECT_NEAR(max_abs(J22), 0.0, 1e-12);
  EXPECT_NEAR(intrinsic_jacobian(eta, BasePoint{{}, {0.1}, {}, 0.2})(0, 0), 1.0, 1e-10);
}

TEST(IntrinsicJacobian, MatchesAnalyticAndOracle) {
  std::mt19937_64 g(53);
  for (int n = 1; n <= 2; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      for (int f = 0; f < 4; ++f) {
        const auto phi = random_phi(g, s);
        for (int t = 0; t < 4; ++t) {
          const auto af = oracle::random_vec(g, s.base_dim(), -0.5, 0.5);
          const auto d = intrinsic_jacobian_detail(phi, af);
          const auto A = analytic_jacobian(phi, af);
          const auto O = oracle::jacobian_fd(phi, af);
          EXPECT_LT(max_abs(d.J - A), 1e-5);
          EXPECT_LT(max_abs(A - O), 1e-6);
          EXPECT_TRUE(d.converged);
          // Curve independence under a finer solver step.
          PartialOptions fine;
          fine.curve.step_scale = 0.25;
          EXPECT_LT(max_abs(intrinsic_jacobian_detail(phi, af, fine).J - d.J), 1e-6);
        }
      }
    }
}

TEST(IntrinsicJacobian, OneSidedAtBoundary) {
  const Splitting s(1, 1);
  const auto phi = GraphFunction::parse(s, {"eta1^2 + tau"}, Box::unit(2));
  const auto d = intrinsic_jacobian_detail(phi, std::vector<double>{0.0, 0.5});
  EXPECT_TRUE(d.one_sided);
  // W phi = 2 eta + phi = 0 + 0.5 at (0, 0.5).
  EXPECT_NEAR(d.J(0, 0), 0.5, 1e-6);
}

TEST(LevelSetJacobian, Examples) {
  const Splitting s(1, 1);
  const GroupPoint p({0.2, 0.4, -0.1});
  EXPECT_NEAR(jacobian_from_levelset(LevelSetFunction::parse(s, {"x1"}), p).J(0, 0), 0.0, 1e-15);
  const auto r = jacobian_from_levelset(LevelSetFunction::parse(s, {"x1 - y1"}), p);
  EXPECT_NEAR(r.J(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.delta, 1.0, 1e-15);
  const auto eta = GraphFunction::parse(s, {"eta1"}, cube(2));
  EXPECT_NEAR(intrinsic_jacobian(eta, BasePoint{{}, {0.4}, {}, 0.0})(0, 0), r.J(0, 0), 1e-10);
  const Splitting s22(2, 2);
  const auto id = LevelSetFunction::parse(s22, {"x1", "x2"});
  EXPECT_NEAR(max_abs(jacobian_from_levelset(id, GroupPoint({1, 2, 3, 4, 5})).J), 0.0, 1e-15);
  EXPECT_THROW(jacobian_from_levelset(LevelSetFunction::parse(s, {"y1"}), p), HorizontalDegeneracy);
}

// Both sides of the implicit function theorem agree.
TEST(LevelSetJacobian, MatchesImplicitGraph) {
  const std::vector<std::pair<Splitting, std::vector<std::string>>> cases = {
      {Splitting(1, 1), {"x1 - y1 + 0.3*sin(t) + 0.2*x1^2"}},
      {Splitting(2, 1), {"x1 + 0.2*x1*y2 - cos(t)/4 + y1/3"}},
      {Splitting(2, 2), {"x1 + 0.1*x2^2 - y1*t/3", "x2 - 0.2*sin(y2) + x1*y1/5"}},
  };
  std::mt19937_64 g(54);
  for (const auto& [s, texts] : cases) {
    const auto f = LevelSetFunction::parse(s, texts);
    const auto phi = implicit_graph(f, cube(s.base_dim(), 0.5));
    for (int t = 0; t < 5; ++t) {
      const auto m = oracle::random_vec(g, s.base_dim(), -0.3, 0.3);
      const auto p = graph_map(phi, BasePoint::from_flat(s, m));
      for (double v : f.eval(p)) EXPECT_NEAR(v, 0.0, 1e-10);
      const auto Jl = jacobian_from_levelset(f, p).J;
      EXPECT_LT(max_abs(intrinsic_jacobian_detail(phi, m).J - Jl), 1e-5);
      EXPECT_LT(max_abs(analytic_jacobian(phi, m) - Jl), 1e-9);
    }
  }
}

// phi_i(gamma(s)) - phi_i(gamma(0)) equals the integral of omega_ij along
// the curve.
TEST(ChainRule, IncrementEqualsIntegral) {
  std::mt19937_64 g(55);
  const Splitting s(2, 1);
  const auto phi = GraphFunction::parse(s, {"sin(eta1 + tau) + v2*w2/2 + tau^2/3"}, cube(4, 2));
  for (std::size_t j = 0; j < 3; ++j) {
    const auto b = oracle::random_vec(g, 4, -0.4, 0.4);
    const int K = 64;
    const auto curve = exp_curve(phi, j, b, 0.6, K);
    double integral = 0.0;
    for (int q = 0; q <= K; ++q) {
      const double w = (q == 0 || q == K) ? 1.0 : (q % 2 ? 4.0 : 2.0);
      integral += w * analytic_jacobian(phi, curve[static_cast<std::size_t>(q)])(0, static_cast<Eigen::Index>(j));
    }
    integral *= 0.6 / K / 3.0;
    EXPECT_NEAR(phi.eval(curve.back())[0] - phi.eval(b)[0], integral, 1e-6) << "field " << j;
  }
}

TEST(Residuals, IntrinsicLinearIsZero) {
  const Splitting s(1, 1);
  const auto eta = GraphFunction::parse(s, {"eta1"}, cube(2));
  Eigen::MatrixXd J(1, 1);
  J << 1.0;
  for (double r : {0.5, 0.1, 0.01}) {
    EXPECT_LE(id_residual(eta, BasePoint{{}, {0.1}, {}, 0.2}, J, r), 1e-10);
    EXPECT_LE(uid_residual(eta, BasePoint{{}, {0.1}, {}, 0.2}, J, r), 1e-10);
  }
  const Splitting s21(2, 1);
  const auto lin = GraphFunction::parse(s21, {"2*v2 - eta1/2 + w2"}, cube(4));
  const auto a = BasePoint{{0.1}, {-0.2}, {0.3}, 0.1};
  const auto Jl = intrinsic_jacobian(lin, a);
  EXPECT_LE(uid_residual(lin, a, Jl, 0.3), 1e-8);
  const auto c = GraphFunction::constant(s21, {1.0}, cube(4));
  EXPECT_EQ(id_residual(c, a, Eigen::MatrixXd::Zero(1, 3), 0.2), 0.0);
  EXPECT_EQ(uid_residual(c, a, Eigen::MatrixXd::Zero(1, 3), 0.2), 0.0);
  EXPECT_THROW(id_residual(c, a, Eigen::MatrixXd::Zero(1, 2), 0.2), DimensionError);
}

TEST(Residuals, SmoothDecreaseOnHalvingSchedule) {
  const Splitting s(1, 1);
  const auto phi = GraphFunction::parse(s, {"0.5*eta1 + 0.3*sin(tau) + 0.2*eta1^2"}, cube(2));
  const std::vector<double> a{0.1, -0.1};
  const auto J = analytic_jacobian(phi, a);
  const std::vector<double> radii{0.2, 0.1, 0.05, 0.025};
  for (bool uniform : {false, true}) {
    const auto rep = residual_report(phi, a, J, radii, uniform);
    EXPECT_TRUE(rep.verdict) << rep.kind;
    for (std::size_t i = 1; i < rep.values.size(); ++i) EXPECT_LE(rep.values[i], rep.values[i - 1] * 1.05);
  }
  EXPECT_THROW(residual_report(phi, a, J, {0.1, 0.2}, false), DomainError);
}

TEST(Verdict, Rules) {
  EXPECT_TRUE(decay_verdict({0, 0, 0}));
  EXPECT_TRUE(decay_verdict({1, 0.5, 0.51, 0.2}));
  EXPECT_FALSE(decay_verdict({1, 1.2}));
  EXPECT_FALSE(decay_verdict({1, 1}));
  EXPECT_FALSE(decay_verdict({}));
}

TEST(Holder, Examples) {
  const Splitting s(1, 1);
  const Box win({-0.5, -0.5}, {0.5, 0.5});
  const auto c = GraphFunction::constant(s, {2.0}, Box::unit(2).shrink(-1));
  EXPECT_EQ(holder_modulus(c, win, 0.1), 0.0);
  const auto eta = GraphFunction::parse(s, {"eta1"}, cube(2));
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    const double a = holder_modulus(eta, win, r);
    EXPECT_LE(a, std::sqrt(r) + 1e-9);
    EXPECT_LE(a, prev);
    prev = a;
  }
  EXPECT_THROW(holder_modulus(eta, Box({-2, 0}, {0, 1}), 0.1), DomainError);
}

TEST(Holder, ReportFields) {
  const Splitting s(1, 1);
  const auto phi = GraphFunction::parse(s, {"0.5*eta1 + 0.3*sin(tau)"}, cube(2));
  const Box win({-0.5, -0.5}, {0.5, 0.5});
  const auto rep = holder_report(phi, win, std::vector<double>{0, 0}, {0.2, 0.1, 0.05});
  EXPECT_EQ(rep.alpha.size(), 3u);
  EXPECT_EQ(rep.upsilon.size(), 3u);
  EXPECT_TRUE(rep.verdict);
  EXPECT_GT(rep.c1, 0.0);
  EXPECT_TRUE(std::isfinite(rep.c2));
  for (double a : rep.alpha) EXPECT_GE(a, 0.0);
}

TEST(Characterization, LinearAndConstantPass) {
  const Splitting s(1, 1);
  const Box win({-0.3, -0.3}, {0.3, 0.3});
  CharacterizationOptions o;
  o.holder.pairs = 1024;
  o.residual.probes = 128;
  for (const char* text : {"eta1", "1.5"}) {
    const auto phi = GraphFunction::parse(s, {text}, cube(2));
    const auto r = characterization_report(phi, win, o);
    EXPECT_TRUE(r.partials_stable) << text;
    EXPECT_TRUE(r.jacobian_continuous) << text;
    EXPECT_TRUE(r.uid.verdict) << text;
    EXPECT_TRUE(r.holder.verdict) << text;
    EXPECT_TRUE(r.conditions_agree) << text;
  }
}

// Rough grid-backed profile: only checks that the report is produced.
TEST(Characterization, RoughProfileRecordsNumbers) {
  const Splitting s(1, 1);
  const Box dom = cube(2);
  const auto src = ScalarField::parse("sqrt(abs(tau))", s.base_vars(), Smoothness::ContinuousOnly);
  const auto phi = GraphFunction(s, {ScalarField::sample_grid(src, dom, {9, 65})}, dom);
  CharacterizationOptions o;
  o.holder.pairs = 512;
  o.residual.probes = 64;
  const auto r = characterization_report(phi, Box({-0.3, -0.3}, {0.3, 0.3}), o);
  EXPECT_EQ(r.holder.alpha.size(), o.radii.size());
  EXPECT_EQ(r.uid.values.size(), o.radii.size());
  std::printf("rough profile: spread %.3g, alpha(last) %.3g, uid(last) %.3g\n", r.partial_spread,
              r.holder.alpha.back(), r.uid.values.back());
}
