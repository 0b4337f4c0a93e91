#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace hcalc;

namespace {

Box cube(std::size_t dim, double r = 2.0) {
  return Box(std::vector<double>(dim, -r), std::vector<double>(dim, r));
}

std::vector<double> vec(const GroupPoint& p) { return {p.coords().begin(), p.coords().end()}; }

GraphFunction random_phi(std::mt19937_64& g, const Splitting& s) {
  std::vector<std::string> comps;
  for (int i = 0; i < s.k(); ++i) comps.push_back(oracle::random_poly(g, s.base_vars(), 4, 2));
  return GraphFunction::parse(s, comps, cube(s.base_dim()));
}

}  // namespace

TEST(Splitting, Constraint) {
  EXPECT_THROW(Splitting(1, 2), DomainError);
  EXPECT_THROW(Splitting(2, 0), DomainError);
  EXPECT_NO_THROW(Splitting(3, 3));
  EXPECT_EQ(Splitting(2, 1).base_vars(), (std::vector<std::string>{"v2", "eta1", "w2", "tau"}));
  EXPECT_EQ(Splitting(2, 1).group_vars(), (std::vector<std::string>{"x1", "x2", "y1", "y2", "t"}));
}

TEST(SplitPoint, Examples) {
  const Splitting s21(2, 1);
  auto [m, h] = split_point(s21, GroupPoint({2, 0, 3, 0, 1}));
  EXPECT_EQ(h.h, (std::vector<double>{2}));
  EXPECT_EQ(m, (BasePoint{{0}, {3}, {0}, 4}));

  const Splitting s11(1, 1);
  auto [m1, h1] = split_point(s11, GroupPoint({1, 2, 0}));
  EXPECT_EQ(h1.h, (std::vector<double>{1}));
  EXPECT_EQ(m1, (BasePoint{{}, {2}, {}, 1}));
}

TEST(Embed, Examples) {
  EXPECT_EQ(embed_i(Splitting(1, 1), BasePoint{{}, {2}, {}, 3}), GroupPoint({0, 2, 3}));
  EXPECT_EQ(embed_j(Splitting(2, 1), TargetPoint{{5}}), GroupPoint({5, 0, 0, 0, 0}));
  EXPECT_THROW(embed_j(Splitting(2, 1), TargetPoint{{5, 1}}), DimensionError);
}

TEST(SplitPoint, RoundTrips) {
  std::mt19937_64 g(11);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      for (int i = 0; i < 500; ++i) {
        const GroupPoint p(oracle::random_vec(g, 2 * n + 1));
        const auto [m, h] = split_point(s, p);
        // Exact up to one rounding of the vertical coordinate.
        const auto back = embed_i(s, m) * embed_j(s, h);
        for (std::size_t c = 0; c + 1 < p.size(); ++c) EXPECT_EQ(back[c], p[c]);
        EXPECT_NEAR(back.t(), p.t(), 4e-16 * (1 + std::fabs(p.t()) + std::fabs(m.tau)));
        const auto mf = oracle::random_vec(g, s.base_dim());
        const auto bm = BasePoint::from_flat(s, mf);
        EXPECT_EQ(vec(embed_i(s, bm)), oracle::embed_i(n, k, mf));
        const auto [m2, h2] = split_point(s, embed_i(s, bm));
        EXPECT_EQ(m2, bm);
        for (double x : h2.h) EXPECT_EQ(x, 0.0);
      }
    }
}

TEST(StarProduct, Examples) {
  const Splitting s21(2, 1);
  const BasePoint a{{1}, {0}, {0}, 0}, b{{0}, {0}, {1}, 0};
  EXPECT_EQ(star_product(s21, a, b), (BasePoint{{1}, {0}, {1}, 0.5}));
  EXPECT_EQ(star_product(s21, a, BasePoint::origin(s21)), a);
  const Splitting s11(1, 1);
  EXPECT_EQ(star_product(s11, BasePoint{{}, {1.5}, {}, 2}, BasePoint{{}, {-0.5}, {}, 3}),
            (BasePoint{{}, {1.0}, {}, 5}));
}

TEST(StarProduct, Homomorphism) {
  std::mt19937_64 g(12);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      for (int i = 0; i < 300; ++i) {
        const auto a = BasePoint::from_flat(s, oracle::random_vec(g, s.base_dim()));
        const auto b = BasePoint::from_flat(s, oracle::random_vec(g, s.base_dim()));
        EXPECT_EQ(embed_i(s, star_product(s, a, b)), embed_i(s, a) * embed_i(s, b));
        EXPECT_EQ(star_product(s, a, star_inverse(a)), BasePoint::origin(s));
      }
    }
}

TEST(GraphMap, Examples) {
  const Splitting s(1, 1);
  const Box dom = cube(2);
  const auto zero = GraphFunction::constant(s, {0.0}, dom);
  const BasePoint m{{}, {0.7}, {}, -0.3};
  EXPECT_EQ(graph_map(zero, m), embed_i(s, m));
  const auto eta = GraphFunction::parse(s, {"eta1"}, dom);
  EXPECT_EQ(graph_map(eta, BasePoint{{}, {1}, {}, 0}), GroupPoint({1, 1, -0.5}));
  EXPECT_THROW(graph_map(eta, BasePoint{{}, {3}, {}, 0}), DomainError);
}

TEST(GraphMap, SplitRecoversBaseAndValue) {
  std::mt19937_64 g(13);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      const auto phi = random_phi(g, s);
      for (int i = 0; i < 200; ++i) {
        const auto mf = oracle::random_vec(g, s.base_dim());
        const auto m = BasePoint::from_flat(s, mf);
        const auto p = graph_map(phi, m);
        const auto expect = oracle::graph_point(n, k, mf, phi.eval(mf));
        for (std::size_t c = 0; c < expect.size(); ++c) EXPECT_NEAR(p[c], expect[c], 1e-12);
        const auto [m2, h2] = split_point(s, p);
        const auto f2 = m2.flat();
        for (std::size_t c = 0; c < mf.size(); ++c) EXPECT_NEAR(f2[c], mf[c], 1e-12);
        const auto hv = phi.eval(mf);
        for (std::size_t c = 0; c < hv.size(); ++c) EXPECT_NEAR(h2.h[c], hv[c], 1e-12);
      }
    }
}

TEST(Sigma, Examples) {
  const std::vector<double> one{1}, zero{0};
  EXPECT_EQ(sigma_term(one, zero, zero, one), 0.5);
  std::mt19937_64 g(14);
  for (int i = 0; i < 200; ++i) {
    const auto v = oracle::random_vec(g, 3), w = oracle::random_vec(g, 3);
    const auto vp = oracle::random_vec(g, 3), wp = oracle::random_vec(g, 3);
    EXPECT_EQ(sigma_term(v, w, v, w), 0.0);
    EXPECT_NEAR(sigma_term(v, w, vp, wp), -sigma_term(vp, wp, v, w), 1e-15);
  }
  EXPECT_THROW(sigma_term(one, one, std::vector<double>{1, 2}, one), DimensionError);
}

TEST(GraphDist, Examples) {
  const Splitting s(1, 1);
  const Box dom = cube(2);
  const auto zero = GraphFunction::constant(s, {0.0}, dom);
  const auto one = GraphFunction::constant(s, {1.0}, dom);
  const BasePoint a{{}, {0.3}, {}, 0.5}, b{{}, {-0.2}, {}, -0.5};
  EXPECT_EQ(graph_dist(zero, a, a), 0.0);
  EXPECT_NEAR(graph_dist(zero, a, b), std::max(0.5, 1.0), 1e-15);
  EXPECT_NEAR(graph_dist(one, BasePoint{{}, {0}, {}, 0}, BasePoint{{}, {1}, {}, 0}), 1.0, 1e-15);
}

TEST(GraphDist, CoordinateFormMatchesAbstract) {
  std::mt19937_64 g(15);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      for (int f = 0; f < 5; ++f) {
        const auto phi = random_phi(g, s);
        for (int i = 0; i < 200; ++i) {
          const auto af = oracle::random_vec(g, s.base_dim()), bf = oracle::random_vec(g, s.base_dim());
          const auto a = BasePoint::from_flat(s, af), b = BasePoint::from_flat(s, bf);
          const double d = graph_dist(phi, a, b);
          EXPECT_NEAR(d, oracle::graph_dist(n, k, af, phi.eval(af), bf, phi.eval(bf)), 1e-12);
          EXPECT_NEAR(d, graph_dist_abstract(phi, a, b), 1e-12);
          EXPECT_LE(d, 2 * sym_graph_dist(phi, a, b) + 1e-15);
          if (!(af == bf)) {
            EXPECT_GT(d, 0.0);
          }
        }
      }
    }
}

TEST(GraphDist, ZeroPhiIsSymmetric) {
  std::mt19937_64 g(16);
  const Splitting s(2, 1);
  const auto zero = GraphFunction::constant(s, {0.0}, cube(4));
  for (int i = 0; i < 200; ++i) {
    const auto a = BasePoint::from_flat(s, oracle::random_vec(g, 4));
    const auto b = BasePoint::from_flat(s, oracle::random_vec(g, 4));
    EXPECT_NEAR(sym_graph_dist(zero, a, b), graph_dist(zero, a, b), 1e-15);
    EXPECT_NEAR(graph_dist(zero, a, b), norm_inf(embed_i(s, star_product(s, star_inverse(b), a))), 1e-15);
  }
}

TEST(RhoDist, Properties) {
  std::mt19937_64 g(17);
  const Splitting s(2, 1);
  const auto c = GraphFunction::constant(s, {0.4}, cube(4));
  // Intrinsic-linear: phi = eta1 / 2 + w2 / 3.
  const auto lin = GraphFunction::parse(s, {"eta1/2 + w2/3"}, cube(4));
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto a = BasePoint::from_flat(s, oracle::random_vec(g, 4));
    const auto b = BasePoint::from_flat(s, oracle::random_vec(g, 4));
    EXPECT_EQ(rho_dist(c, a, a), 0.0);
    EXPECT_NEAR(rho_dist(c, a, b), graph_dist(c, a, b), 1e-15);
    worst = std::max(worst, rho_dist(lin, a, b) / graph_dist(lin, a, b));
  }
  std::printf("intrinsic-linear sup rho/d = %.6f\n", worst);
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 10.0);
}

TEST(LipschitzReport, ConstantAndLinear) {
  const Splitting s(1, 1);
  const Box dom = Box::unit(2);
  std::vector<BasePoint> pts;
  for (const auto& x : sample_box(dom, 64, 3)) pts.push_back(BasePoint::from_flat(s, x));
  const auto rc = lipschitz_report(GraphFunction::constant(s, {2.0}, dom), pts);
  EXPECT_EQ(rc.lip, 0.0);
  const auto rl = lipschitz_report(GraphFunction::parse(s, {"eta1"}, dom), pts);
  EXPECT_GT(rl.lip, 0.0);
  EXPECT_TRUE(std::isfinite(rl.lip));
  EXPECT_GT(rl.c0_lo, 0.0);
  EXPECT_LE(rl.c0_hi, 1.0 + 1e-12);
  EXPECT_GT(rl.holder_c1, 0.0);
  EXPECT_TRUE(std::isfinite(rl.holder_c2));
  EXPECT_THROW(lipschitz_report(GraphFunction::constant(s, {0.0}, dom), {pts[0], pts[0]}), EmptySample);
  EXPECT_THROW(lipschitz_report(GraphFunction::constant(s, {0.0}, dom), {pts[0]}), EmptySample);
}

TEST(LipschitzReport, NormRatioBracket) {
  std::mt19937_64 g(18);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const Splitting s(n, k);
      std::vector<BasePoint> pts;
      for (int i = 0; i < 40; ++i) pts.push_back(BasePoint::from_flat(s, oracle::random_vec(g, s.base_dim())));
      const auto r = lipschitz_report(GraphFunction::constant(s, std::vector<double>(k, 0.0), cube(s.base_dim())), pts);
      EXPECT_GT(r.c0_lo, 0.0);
      EXPECT_LE(r.c0_hi, 1.0 + 1e-12);
    }
}
