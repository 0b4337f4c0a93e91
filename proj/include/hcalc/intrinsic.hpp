#pragma once

// Vector fields W^phi_j on the base, their integral curves, intrinsic partial
// derivatives along those curves, and differentiability diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/error.hpp"
#include "hcalc/levelset.hpp"
#include "hcalc/lowdisc.hpp"
#include "hcalc/parallel.hpp"
#include "hcalc/split.hpp"

namespace hcalc {

// W fields are 0-based here. Field j moves base coordinate j at unit speed
// (v block, then eta, then w) and tau at rate c_j:
//   j <  n-k        : c = -w_j / 2
//   n-k <= j < n    : c = phi_{j-(n-k)}
//   n <= j < 2n-k   : c = +v_{j-n} / 2
inline double w_tau_coeff(const GraphFunction& phi, std::size_t j, std::span<const double> p) {
  const Splitting& s = phi.splitting();
  const auto o = static_cast<std::size_t>(s.outer());
  const auto n = static_cast<std::size_t>(s.n());
  if (j < o) return -0.5 * p[n + j];
  if (j < n) {
    phi.require_inside(p, "W field");
    return phi.component(j - o)(p);
  }
  return 0.5 * p[j - n];
}

inline std::vector<double> w_field(const GraphFunction& phi, std::size_t j, const BasePoint& p) {
  const Splitting& s = phi.splitting();
  if (j >= s.fields())
    throw DomainError("w_field: index " + std::to_string(j) + " out of range [0, " +
                      std::to_string(s.fields()) + ")");
  p.check(s);
  const auto f = p.flat();
  std::vector<double> c(s.base_dim(), 0.0);
  c[j] = 1.0;
  c.back() = w_tau_coeff(phi, j, f);
  return c;
}

struct CurveOptions {
  double max_step = 1e-3;
  double accept_tol = 1e-10;
  int max_halvings = 12;
  /// Multiplies the initial step; used to perturb the solver.
  double step_scale = 1.0;
};

/// RK4 samples of the integral curve of W_j through b at times s*q/K, q=0..K.
inline std::vector<std::vector<double>> exp_curve(const GraphFunction& phi, std::size_t j,
                                                  std::span<const double> b, double s, int K,
                                                  const CurveOptions& opts = {}) {
  const Splitting& sp = phi.splitting();
  if (j >= sp.fields()) throw DomainError("exp_curve: field index out of range");
  if (b.size() != sp.base_dim()) throw DimensionError("exp_curve: wrong base dimension");
  if (K < 1) throw DomainError("exp_curve: need at least one sample interval");
  phi.require_inside(b, "exp_curve");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(K) + 1,
                                       std::vector<double>(b.begin(), b.end()));
  if (s == 0.0) return out;

  const std::size_t ti = sp.tau_offset();
  const double h0 = std::min(opts.max_step, std::abs(s) / 64.0) * opts.step_scale;
  long per = std::max(1L, static_cast<long>(std::ceil(std::abs(s) / K / h0)));

  std::vector<double> y(b.begin(), b.end());
  // Integrates with `per` steps per sample interval; returns sampled tau.
  auto run = [&](long steps_per) {
    std::vector<double> taus(static_cast<std::size_t>(K) + 1, b[ti]);
    const long total = steps_per * K;
    const double h = s / static_cast<double>(total);
    double tau = b[ti];
    auto rhs = [&](double t, double tv) {
      y[j] = b[j] + t;
      y[ti] = tv;
      if (!phi.contains(y)) throw CurveExit("integral curve left the domain", t);
      return w_tau_coeff(phi, j, y);
    };
    double last_inside = 0.0;
    for (long i = 0; i < total; ++i) {
      const double t = s * static_cast<double>(i) / static_cast<double>(total);
      try {
        const double k1 = rhs(t, tau);
        const double k2 = rhs(t + 0.5 * h, tau + 0.5 * h * k1);
        const double k3 = rhs(t + 0.5 * h, tau + 0.5 * h * k2);
        const double k4 = rhs(t + h, tau + h * k3);
        tau += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      } catch (const CurveExit&) {
        throw CurveExit("integral curve of W_" + std::to_string(j + 1) + " left the domain",
                        last_inside);
      }
      last_inside = s * static_cast<double>(i + 1) / static_cast<double>(total);
      if ((i + 1) % steps_per == 0) taus[static_cast<std::size_t>((i + 1) / steps_per)] = tau;
    }
    return taus;
  };

  std::vector<double> coarse = run(per);
  for (int halving = 0;; ++halving) {
    std::vector<double> fine = run(2 * per);
    double diff = 0.0;
    for (std::size_t q = 0; q < fine.size(); ++q) diff = std::max(diff, std::abs(fine[q] - coarse[q]));
    if (diff <= opts.accept_tol) {
      for (int q = 0; q <= K; ++q) {
        auto& pt = out[static_cast<std::size_t>(q)];
        pt[j] = b[j] + s * q / K;
        pt[ti] = fine[static_cast<std::size_t>(q)];
      }
      return out;
    }
    if (halving >= opts.max_halvings)
      throw StepUnderflow("RK4 step halving did not reach tolerance (difference " +
                          std::to_string(diff) + ")");
    coarse = std::move(fine);
    per *= 2;
  }
}

/// exp_a(s W_j)(b): endpoint of the integral curve.
inline BasePoint exp_map(const GraphFunction& phi, std::size_t j, const BasePoint& b, double s,
                         const CurveOptions& opts = {}) {
  b.check(phi.splitting());
  auto c = exp_curve(phi, j, b.flat(), s, 1, opts);
  return BasePoint::from_flat(phi.splitting(), c.back());
}

struct PartialOptions {
  /// Difference step is h_scale * (1 + |a|).
  double h_scale = 1e-3;
  double conv_tol = 1e-6;
  CurveOptions curve;
};

struct PartialResult {
  double value = 0.0;
  bool converged = true;
  double spread = 0.0;
  bool one_sided = false;
};

namespace detail {

inline double euclid(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

// Column j of the intrinsic Jacobian from difference quotients of phi along
// the W_j curve through a.
inline std::vector<PartialResult> curve_column(const GraphFunction& phi, std::size_t j,
                                               std::span<const double> a,
                                               const PartialOptions& opts) {
  const std::size_t k = phi.k();
  const double h = opts.h_scale * (1.0 + euclid(a));
  std::vector<PartialResult> out(k);

  auto values = [&](const std::vector<std::vector<double>>& pts) {
    std::vector<std::vector<double>> v;
    for (const auto& p : pts) v.push_back(phi.eval(p));
    return v;
  };

  try {
    const auto fwd = values(exp_curve(phi, j, a, h, 4, opts.curve));
    const auto bwd = values(exp_curve(phi, j, a, -h, 4, opts.curve));
    for (std::size_t i = 0; i < k; ++i) {
      auto D = [&](int q) { return (fwd[q][i] - bwd[q][i]) / (2.0 * h * q / 4.0); };
      const double r1 = (4.0 * D(2) - D(4)) / 3.0;
      const double r2 = (4.0 * D(1) - D(2)) / 3.0;
      out[i].value = r1;
      out[i].spread = std::abs(r1 - r2);
      out[i].converged = out[i].spread <= opts.conv_tol;
    }
    return out;
  } catch (const CurveExit&) {
  }

  // Second-order one-sided stencil on whichever side has room.
  for (double sgn : {1.0, -1.0}) {
    std::vector<std::vector<double>> pts;
    try {
      pts = exp_curve(phi, j, a, sgn * 2.0 * h, 8, opts.curve);
    } catch (const CurveExit&) {
      continue;
    }
    const auto v = values(pts);
    for (std::size_t i = 0; i < k; ++i) {
      // step hq = (q/4) h, samples at index q and 2q
      auto D = [&](int q) {
        return sgn * (-3.0 * v[0][i] + 4.0 * v[q][i] - v[2 * q][i]) / (2.0 * h * q / 4.0);
      };
      const double r1 = (4.0 * D(2) - D(4)) / 3.0;
      const double r2 = (4.0 * D(1) - D(2)) / 3.0;
      out[i].value = r1;
      out[i].spread = std::abs(r1 - r2);
      out[i].converged = out[i].spread <= opts.conv_tol;
      out[i].one_sided = true;
    }
    return out;
  }
  throw CurveExit("no room inside the domain for a difference quotient along W_" +
                      std::to_string(j + 1),
                  0.0);
}

}  // namespace detail

/// d^{phi_j} phi_i at a, 0-based indices.
inline PartialResult intrinsic_partial(const GraphFunction& phi, std::size_t i, std::size_t j,
                                       const BasePoint& a, const PartialOptions& opts = {}) {
  const Splitting& s = phi.splitting();
  if (i >= phi.k() || j >= s.fields()) throw DomainError("intrinsic_partial: index out of range");
  a.check(s);
  return detail::curve_column(phi, j, a.flat(), opts)[i];
}

struct JacobianDetail {
  IntrinsicJacobian J;
  bool converged = true;
  bool one_sided = false;
  double max_spread = 0.0;
};

inline JacobianDetail intrinsic_jacobian_detail(const GraphFunction& phi,
                                                std::span<const double> a,
                                                const PartialOptions& opts = {}) {
  const Splitting& s = phi.splitting();
  phi.require_inside(a, "intrinsic_jacobian");
  JacobianDetail d;
  d.J.resize(static_cast<Eigen::Index>(phi.k()), static_cast<Eigen::Index>(s.fields()));
  for (std::size_t j = 0; j < s.fields(); ++j) {
    const auto col = detail::curve_column(phi, j, a, opts);
    for (std::size_t i = 0; i < phi.k(); ++i) {
      d.J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i].value;
      d.converged = d.converged && col[i].converged;
      d.one_sided = d.one_sided || col[i].one_sided;
      d.max_spread = std::max(d.max_spread, col[i].spread);
    }
  }
  return d;
}

inline IntrinsicJacobian intrinsic_jacobian(const GraphFunction& phi, const BasePoint& a,
                                            const PartialOptions& opts = {}) {
  a.check(phi.splitting());
  return intrinsic_jacobian_detail(phi, a.flat(), opts).J;
}

/// W_j phi_i = d_j phi_i + c_j d_tau phi_i from Euclidean partials.
inline IntrinsicJacobian analytic_jacobian(const GraphFunction& phi, std::span<const double> a) {
  const Splitting& s = phi.splitting();
  phi.require_inside(a, "analytic_jacobian");
  IntrinsicJacobian J(static_cast<Eigen::Index>(phi.k()), static_cast<Eigen::Index>(s.fields()));
  std::vector<double> dir(s.base_dim());
  for (std::size_t j = 0; j < s.fields(); ++j) {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[j] = 1.0;
    dir.back() = w_tau_coeff(phi, j, a);
    for (std::size_t i = 0; i < phi.k(); ++i)
      J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          phi.component(i).directional(a, dir);
  }
  return J;
}

inline IntrinsicJacobian analytic_jacobian(const GraphFunction& phi, const BasePoint& a) {
  a.check(phi.splitting());
  return analytic_jacobian(phi, a.flat());
}

struct LevelSetJacobian {
  IntrinsicJacobian J;
  /// |det Xf|
  double delta = 0.0;
};

/// J = -(Xf)^{-1} Yf at p.
inline LevelSetJacobian jacobian_from_levelset(const LevelSetFunction& f, const GroupPoint& p) {
  const int k = f.splitting().k();
  const Eigen::MatrixXd H = f.horizontal_jacobian(p);
  const Eigen::MatrixXd X = H.leftCols(k);
  const Eigen::MatrixXd Y = H.rightCols(2 * f.splitting().n() - k);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(X);
  const double det = std::abs(lu.determinant());
  if (!(det >= f.det_threshold()) || det == 0.0)
    throw HorizontalDegeneracy("|det Xf| = " + std::to_string(det) + " below threshold", det);
  return {-lu.solve(Y), det};
}

struct ResidualOptions {
  std::size_t probes = 256;
  std::uint64_t seed = 7;
  /// Pairs closer than this in d_phi are skipped.
  double min_dist = 1e-9;
};

namespace detail {

// I_r(a) intersected with the domain box.
inline Box probe_box(const GraphFunction& phi, std::span<const double> a, double r) {
  if (!(r > 0.0)) throw DomainError("probe radius must be positive");
  const Box& d = phi.domain();
  std::vector<double> lo(a.size()), hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo[i] = std::max(d.lo(i), a[i] - r);
    hi[i] = std::min(d.hi(i), a[i] + r);
    if (!(lo[i] < hi[i])) throw EmptySample("probe box has an empty axis");
  }
  return Box(std::move(lo), std::move(hi));
}

inline double linear_defect(const GraphFunction& phi, const IntrinsicJacobian& J,
                            std::span<const double> a, std::span<const double> fa,
                            std::span<const double> b, std::span<const double> fb) {
  const std::size_t hd = phi.splitting().fields();
  double s2 = 0.0;
  for (std::size_t i = 0; i < phi.k(); ++i) {
    double lin = 0.0;
    for (std::size_t j = 0; j < hd; ++j)
      lin += J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (b[j] - a[j]);
    const double e = fb[i] - fa[i] - lin;
    s2 += e * e;
  }
  return std::sqrt(s2);
}

inline void check_jacobian_shape(const GraphFunction& phi, const IntrinsicJacobian& J) {
  if (J.rows() != static_cast<Eigen::Index>(phi.k()) ||
      J.cols() != static_cast<Eigen::Index>(phi.splitting().fields()))
    throw DimensionError("Jacobian must be k x (2n-k)");
}

}  // namespace detail

/// sup_b |phi(b) - phi(a) - J pi(a^{-1} * b)| / d_phi(b, a) over probes in I_r(a).
inline double id_residual(const GraphFunction& phi, std::span<const double> a,
                          const IntrinsicJacobian& J, double r, const ResidualOptions& opts = {}) {
  detail::check_jacobian_shape(phi, J);
  const Box box = detail::probe_box(phi, a, r);
  const auto fa = phi.eval(a);
  Halton seq(box.dim(), opts.seed);
  const auto vals = parallel_map<double>(opts.probes, [&](std::size_t i) {
    const auto b = box.at(seq.point(i));
    const auto fb = phi.eval(b);
    const double d = detail::graph_gauge_raw(phi.splitting(), b.data(), a.data(), fa.data());
    if (d < opts.min_dist) return -1.0;
    return detail::linear_defect(phi, J, a, fa, b, fb) / d;
  });
  double sup = -1.0;
  for (double v : vals) sup = std::max(sup, v);
  if (sup < 0.0) throw EmptySample("id_residual: no probe at positive distance");
  return sup;
}

inline double id_residual(const GraphFunction& phi, const BasePoint& a, const IntrinsicJacobian& J,
                          double r, const ResidualOptions& opts = {}) {
  a.check(phi.splitting());
  return id_residual(phi, a.flat(), J, r, opts);
}

/// sup over pairs b, b' in I_r(a) of |phi(b') - phi(b) - J pi(b^{-1} * b')| / d_phi(b', b).
inline double uid_residual(const GraphFunction& phi, std::span<const double> a,
                           const IntrinsicJacobian& J, double r, const ResidualOptions& opts = {}) {
  detail::check_jacobian_shape(phi, J);
  const Box box = detail::probe_box(phi, a, r);
  const std::size_t d = box.dim();
  Halton seq(2 * d, opts.seed);
  const auto vals = parallel_map<double>(opts.probes, [&](std::size_t i) {
    const auto u = seq.point(i);
    const auto b = box.at(std::span<const double>(u.data(), d));
    const auto bp = box.at(std::span<const double>(u.data() + d, d));
    const auto fb = phi.eval(b);
    const auto fbp = phi.eval(bp);
    const double dist = detail::graph_gauge_raw(phi.splitting(), bp.data(), b.data(), fb.data());
    if (dist < opts.min_dist) return -1.0;
    return detail::linear_defect(phi, J, b, fb, bp, fbp) / dist;
  });
  double sup = -1.0;
  for (double v : vals) sup = std::max(sup, v);
  if (sup < 0.0) throw EmptySample("uid_residual: no pair at positive distance");
  return sup;
}

inline double uid_residual(const GraphFunction& phi, const BasePoint& a, const IntrinsicJacobian& J,
                           double r, const ResidualOptions& opts = {}) {
  a.check(phi.splitting());
  return uid_residual(phi, a.flat(), J, r, opts);
}

struct ResidualReport {
  std::string kind;  // "id" or "uid"
  std::vector<double> center;
  std::vector<double> radii;
  std::vector<double> values;
  bool verdict = false;
};

struct VerdictOptions {
  /// A value may exceed its predecessor by this fraction and still count as
  /// nonincreasing.
  double slack = 0.05;
  /// Values at or below this are treated as zero.
  double zero_tol = 1e-10;
};

/// Nonincreasing within slack, and either all zero or strictly smaller at
/// the end than at the start.
inline bool decay_verdict(const std::vector<double>& v, const VerdictOptions& o = {}) {
  if (v.empty()) return false;
  bool all_zero = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > o.zero_tol) all_zero = false;
    if (i > 0 && v[i] > v[i - 1] * (1.0 + o.slack) + o.zero_tol) return false;
  }
  return all_zero || v.back() < v.front();
}

inline void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw DomainError("radius schedule is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw DomainError("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw DomainError("radii must be strictly decreasing");
  }
}

inline ResidualReport residual_report(const GraphFunction& phi, std::span<const double> a,
                                      const IntrinsicJacobian& J, const std::vector<double>& radii,
                                      bool uniform, const ResidualOptions& opts = {},
                                      const VerdictOptions& vo = {}) {
  check_radii(radii);
  ResidualReport r;
  r.kind = uniform ? "uid" : "id";
  r.center.assign(a.begin(), a.end());
  r.radii = radii;
  for (double rad : radii)
    r.values.push_back(uniform ? uid_residual(phi, a, J, rad, opts) : id_residual(phi, a, J, rad, opts));
  r.verdict = decay_verdict(r.values, vo);
  return r;
}

struct HolderOptions {
  std::size_t pairs = 4096;
  std::uint64_t seed = 11;
  double r_min = 1e-4;
  /// Largest pair offset; 0 means the diameter of the window.
  double r_max = 0.0;
};

/// Fixed pair sample in a window with log-uniform offset lengths. Because
/// the sample does not depend on r, alpha(r) is monotone in r.
class HolderSample {
 public:
  HolderSample(const Box& window, const HolderOptions& opts = {}) {
    const std::size_t d = window.dim();
    double rmax = opts.r_max;
    if (rmax <= 0.0) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += window.side(i) * window.side(i);
      rmax = std::sqrt(s);
    }
    if (!(opts.r_min > 0.0) || !(opts.r_min < rmax)) throw DomainError("HolderSample: bad offset range");
    Halton seq(2 * d + 1, opts.seed);
    std::vector<double> u(2 * d + 1);
    for (std::size_t i = 0; i < opts.pairs; ++i) {
      seq.fill(i, u.data());
      std::vector<double> b = window.at(std::span<const double>(u.data(), d));
      std::vector<double> dir(d);
      double nrm = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        dir[c] = 2.0 * u[d + c] - 1.0;
        nrm += dir[c] * dir[c];
      }
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) continue;
      const double len = opts.r_min * std::pow(rmax / opts.r_min, u[2 * d]);
      std::vector<double> bp(d), bm(d);
      for (std::size_t c = 0; c < d; ++c) {
        bp[c] = b[c] + len * dir[c] / nrm;
        bm[c] = b[c] - len * dir[c] / nrm;
      }
      if (window.contains(bp)) {
        add(b, bp);
      } else if (window.contains(bm)) {
        add(b, bm);
      }
    }
  }

  std::size_t size() const noexcept { return dist_.size(); }
  const std::vector<double>& a(std::size_t i) const { return a_[i]; }
  const std::vector<double>& b(std::size_t i) const { return b_[i]; }
  double dist(std::size_t i) const { return dist_[i]; }

 private:
  void add(std::vector<double> x, std::vector<double> y) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    a_.push_back(std::move(x));
    b_.push_back(std::move(y));
    dist_.push_back(std::sqrt(s));
  }

  std::vector<std::vector<double>> a_, b_;
  std::vector<double> dist_;
};

/// Half-Hoelder quotient of every pair in the sample.
inline std::vector<double> holder_quotients(const GraphFunction& phi, const HolderSample& S) {
  return parallel_map<double>(S.size(), [&](std::size_t i) {
    const auto fa = phi.eval(S.a(i));
    const auto fb = phi.eval(S.b(i));
    double e = 0.0;
    for (std::size_t c = 0; c < fa.size(); ++c) e += (fa[c] - fb[c]) * (fa[c] - fb[c]);
    return std::sqrt(e) / std::sqrt(S.dist(i));
  });
}

inline double holder_modulus(const GraphFunction& phi, const HolderSample& S,
                             const std::vector<double>& q, double r) {
  double sup = -1.0;
  for (std::size_t i = 0; i < S.size(); ++i)
    if (S.dist(i) <= r) sup = std::max(sup, q[i]);
  if (sup < 0.0) throw EmptySample("holder_modulus: no pair within distance " + std::to_string(r));
  (void)phi;
  return sup;
}

/// alpha(r) on the window.
inline double holder_modulus(const GraphFunction& phi, const Box& window, double r,
                             const HolderOptions& opts = {}) {
  if (!phi.domain().contains_box(window)) throw DomainError("holder window must lie inside the domain");
  const HolderSample S(window, opts);
  return holder_modulus(phi, S, holder_quotients(phi, S), r);
}

/// upsilon(delta): sup of the half-Hoelder quotient over pairs in I_delta(a).
inline double upsilon(const GraphFunction& phi, std::span<const double> a, double delta,
                      const HolderOptions& opts = {}) {
  const Box box = detail::probe_box(phi, a, delta);
  HolderOptions o = opts;
  o.r_max = 0.0;
  o.r_min = std::min(1e-4, 0.5 * box.min_side());
  const HolderSample S(box, o);
  const auto q = holder_quotients(phi, S);
  double sup = 0.0;
  for (double v : q) sup = std::max(sup, v);
  if (S.size() == 0) throw EmptySample("upsilon: no pairs");
  return sup;
}

struct HolderReport {
  std::vector<double> center;
  std::vector<double> radii;
  std::vector<double> alpha;
  std::vector<double> upsilon;
  double c1 = 0.0;
  double c2 = 0.0;
  bool verdict = false;
};

inline HolderReport holder_report(const GraphFunction& phi, const Box& window,
                                  std::span<const double> center, const std::vector<double>& radii,
                                  const HolderOptions& opts = {}, const VerdictOptions& vo = {},
                                  std::size_t bracket_points = 48) {
  check_radii(radii);
  if (!phi.domain().contains_box(window)) throw DomainError("holder window must lie inside the domain");
  HolderReport rep;
  rep.center.assign(center.begin(), center.end());
  rep.radii = radii;
  const HolderSample S(window, opts);
  const auto q = holder_quotients(phi, S);
  for (double r : radii) {
    rep.alpha.push_back(holder_modulus(phi, S, q, r));
    rep.upsilon.push_back(upsilon(phi, center, r, opts));
  }
  std::vector<BasePoint> pts;
  for (const auto& p : sample_box(window, bracket_points, opts.seed))
    pts.push_back(BasePoint::from_flat(phi.splitting(), p));
  const auto lr = lipschitz_report(phi, pts, opts.seed);
  rep.c1 = lr.holder_c1;
  rep.c2 = lr.holder_c2;
  rep.verdict = decay_verdict(rep.alpha, vo);
  return rep;
}

struct CharacterizationOptions {
  PartialOptions partial;
  ResidualOptions residual;
  HolderOptions holder;
  VerdictOptions verdict;
  std::vector<double> radii = {0.2, 0.1, 0.05, 0.025};
  /// Points at which partials are recomputed under solver perturbation.
  std::size_t stability_points = 5;
  /// Grid nodes per axis for the coarse continuity sweep; the fine sweep
  /// uses 2*nodes-1.
  int grid_nodes = 3;
  double spread_tol = 1e-6;
  std::uint64_t seed = 3;
};

struct CharacterizationReport {
  double partial_spread = 0.0;
  bool partials_converged = true;
  bool partials_stable = false;
  std::vector<double> continuity_spacing;
  std::vector<double> continuity_modulus;
  bool jacobian_continuous = false;
  ResidualReport uid;
  HolderReport holder;
  bool conditions_agree = false;
};

namespace detail {

// Largest entry change of J between grid neighbours, over a uniform grid.
inline double jacobian_grid_modulus(const GraphFunction& phi, const Box& window, int nodes,
                                    const PartialOptions& opts) {
  const std::size_t d = window.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(nodes);
  const auto Js = parallel_map<IntrinsicJacobian>(total, [&](std::size_t idx) {
    std::vector<double> x(d);
    std::size_t rem = idx;
    for (std::size_t i = d; i-- > 0;) {
      x[i] = window.lo(i) + window.side(i) * static_cast<double>(rem % nodes) / (nodes - 1);
      rem /= static_cast<std::size_t>(nodes);
    }
    return intrinsic_jacobian_detail(phi, x, opts).J;
  });
  double mod = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t stride = 1;
    for (std::size_t i = d; i-- > 0;) {
      const std::size_t coord = idx / stride % static_cast<std::size_t>(nodes);
      if (coord + 1 < static_cast<std::size_t>(nodes))
        mod = std::max(mod, (Js[idx] - Js[idx + stride]).cwiseAbs().maxCoeff());
      stride *= static_cast<std::size_t>(nodes);
    }
  }
  return mod;
}

}  // namespace detail

/// Runs the four diagnostics that characterize uniform intrinsic
/// differentiability on a window and records whether they agree.
inline CharacterizationReport characterization_report(const GraphFunction& phi, const Box& window,
                                                      const CharacterizationOptions& opts = {}) {
  if (!phi.domain().contains_box(window)) throw DomainError("window must lie inside the domain");
  CharacterizationReport rep;

  auto pts = sample_box(window, opts.stability_points > 0 ? opts.stability_points - 1 : 0, opts.seed);
  pts.insert(pts.begin(), window.center());
  PartialOptions fine = opts.partial;
  fine.curve.step_scale *= 0.25;
  PartialOptions shifted = opts.partial;
  shifted.h_scale *= 0.7;
  for (const auto& p : pts) {
    const auto base = intrinsic_jacobian_detail(phi, p, opts.partial);
    const auto a = intrinsic_jacobian_detail(phi, p, fine);
    const auto b = intrinsic_jacobian_detail(phi, p, shifted);
    rep.partials_converged = rep.partials_converged && base.converged;
    rep.partial_spread = std::max({rep.partial_spread, (base.J - a.J).cwiseAbs().maxCoeff(),
                                   (base.J - b.J).cwiseAbs().maxCoeff()});
  }
  rep.partials_stable = rep.partials_converged && rep.partial_spread <= opts.spread_tol;

  for (int nodes : {opts.grid_nodes, 2 * opts.grid_nodes - 1}) {
    rep.continuity_spacing.push_back(window.min_side() / (nodes - 1));
    rep.continuity_modulus.push_back(detail::jacobian_grid_modulus(phi, window, nodes, opts.partial));
  }
  rep.jacobian_continuous = decay_verdict(rep.continuity_modulus, opts.verdict);

  const auto c = window.center();
  const auto J = intrinsic_jacobian_detail(phi, c, opts.partial).J;
  rep.uid = residual_report(phi, c, J, opts.radii, true, opts.residual, opts.verdict);
  rep.holder = holder_report(phi, window, c, opts.radii, opts.holder, opts.verdict);

  const bool all = rep.partials_stable && rep.jacobian_continuous && rep.uid.verdict && rep.holder.verdict;
  const bool none = !rep.partials_stable && !rep.jacobian_continuous && !rep.uid.verdict &&
                    !rep.holder.verdict;
  rep.conditions_agree = all || none;
  return rep;
}

}  // namespace hcalc
