#pragma once

// Friedrichs mollification of level-set maps, a Newton implicit-function
// solver for the graph over M, and the epsilon-family of smooth graphs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/error.hpp"
#include "hcalc/field.hpp"
#include "hcalc/intrinsic.hpp"
#include "hcalc/levelset.hpp"
#include "hcalc/parallel.hpp"
#include "hcalc/split.hpp"

namespace hcalc {

/// Bump kernel exp(-1/(1-|x|^2)) sampled on a cubic lattice of spacing
/// eps/per_radius inside the open ball of radius eps, normalized so the
/// weights sum to one. The lattice is symmetric, so first moments vanish and
/// affine functions are reproduced exactly.
class Mollifier {
 public:
  Mollifier(std::size_t dim, double eps, int per_radius) : dim_(dim), eps_(eps) {
    if (!(eps > 0.0)) throw DomainError("mollifier radius must be positive");
    if (per_radius < 1) throw DomainError("mollifier needs at least one lattice step per radius");
    const int m = per_radius;
    const double h = eps / m;
    std::vector<int> idx(dim, -m);
    double mass = 0.0;
    for (;;) {
      double r2 = 0.0;
      for (int i : idx) r2 += static_cast<double>(i) * i;
      r2 /= static_cast<double>(m) * m;
      if (r2 < 1.0) {
        const double w = std::exp(-1.0 / (1.0 - r2));
        for (int i : idx) offsets_.push_back(h * i);
        weights_.push_back(w);
        mass += w;
      }
      std::size_t a = 0;
      while (a < dim && ++idx[a] > m) idx[a++] = -m;
      if (a == dim) break;
    }
    for (double& w : weights_) w /= mass;
  }

  std::size_t dim() const noexcept { return dim_; }
  double eps() const noexcept { return eps_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::span<const double> offset(std::size_t i) const { return {offsets_.data() + i * dim_, dim_}; }

  template <class T, class F>
  T apply(std::span<const T> x, F&& f) const {
    thread_local std::vector<T> y;
    y.resize(dim_);
    T acc(0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double* q = offsets_.data() + i * dim_;
      for (std::size_t c = 0; c < dim_; ++c) y[c] = x[c] + T(q[c]);
      acc = acc + T(weights_[i]) * f(std::span<const T>(y.data(), dim_));
    }
    return acc;
  }

 private:
  std::size_t dim_;
  double eps_;
  std::vector<double> offsets_;
  std::vector<double> weights_;
};

inline int default_mollifier_resolution(std::size_t dim) { return dim <= 3 ? 6 : 3; }

/// F * rho_eps on the eps-interior of `box` (or of F's own domain when it
/// has one). Evaluated lazily by lattice quadrature.
inline ScalarField mollify(const ScalarField& F, double eps, std::optional<Box> box = std::nullopt,
                           int per_radius = 0) {
  if (!box) {
    if (!F.domain()) throw DomainError("mollify: field has no domain box; supply one");
    box = *F.domain();
  }
  if (box->dim() != F.arity()) throw DimensionError("mollify: box dimension differs from field arity");
  if (!(eps > 0.0) || !(eps < 0.5 * box->min_side()))
    throw DomainError("mollify: eps must be positive and below half the smallest box side");
  if (per_radius <= 0) per_radius = default_mollifier_resolution(F.arity());
  auto K = std::make_shared<const Mollifier>(F.arity(), eps, per_radius);
  const Box interior = box->shrink(eps);
  auto fn = [F, K, interior](std::span<const double> x) {
    if (!interior.contains(x, 1e-12)) throw DomainError("mollified field evaluated outside its box");
    return K->apply<double>(x, [&](std::span<const double> y) { return F(y); });
  };
  FunctionFieldImpl::DualFn dual;
  if (F.has_dual()) {
    dual = [F, K](std::span<const Dual> x) {
      return K->apply<Dual>(x, [&](std::span<const Dual> y) { return F.eval_dual(y); });
    };
  }
  return ScalarField::from_function(F.arity(), fn, interior, Smoothness::Smooth, dual);
}

inline LevelSetFunction mollify(const LevelSetFunction& f, double eps, const Box& box,
                                int per_radius = 0) {
  std::vector<ScalarField> comps;
  for (const auto& c : f.components()) comps.push_back(mollify(c, eps, box, per_radius));
  return LevelSetFunction(f.splitting(), std::move(comps), box.shrink(eps), f.det_threshold());
}

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  std::vector<double> x0;  // empty means zero
};

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Solves f(i(m) . j(x)) = 0 for x in R^k. Moving x along e_j moves the
/// point along the X_j flow, so the Newton matrix is Xf at the current point.
/// Steps that increase the residual are halved.
inline std::vector<double> implicit_solve_flat(const LevelSetFunction& f, std::span<const double> m,
                                               const NewtonOptions& opts = {}) {
  const Splitting& s = f.splitting();
  if (m.size() != s.base_dim()) throw DimensionError("implicit_solve: wrong base dimension");
  const auto k = static_cast<std::size_t>(s.k());
  std::vector<double> x = opts.x0.empty() ? std::vector<double>(k, 0.0) : opts.x0;
  if (x.size() != k) throw DimensionError("implicit_solve: start point must have length k");
  std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);

  auto residual = [&](const std::vector<double>& xv) {
    detail::graph_point_raw(s, m.data(), xv.data(), p.data());
    return f.eval(p);
  };

  auto F = residual(x);
  double norm = detail::inf_norm(F);
  for (int it = 0; it < opts.max_iter; ++it) {
    if (norm <= opts.tol) return x;
    detail::graph_point_raw(s, m.data(), x.data(), p.data());
    const Eigen::MatrixXd X = f.Xf(GroupPoint(p));
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(X);
    const double det = std::abs(lu.determinant());
    if (!(det >= f.det_threshold()) || det == 0.0)
      throw HorizontalDegeneracy("implicit_solve: |det Xf| = " + std::to_string(det) +
                                     " below threshold",
                                 det);
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(F.data(), static_cast<Eigen::Index>(k));
    const Eigen::VectorXd dx = lu.solve(-rhs);
    double step = 1.0;
    for (int ls = 0;; ++ls) {
      std::vector<double> xn(x);
      for (std::size_t i = 0; i < k; ++i) xn[i] += step * dx(static_cast<Eigen::Index>(i));
      auto Fn = residual(xn);
      const double nn = detail::inf_norm(Fn);
      if (nn < norm || ls >= 30 || nn <= opts.tol) {
        x = std::move(xn);
        F = std::move(Fn);
        norm = nn;
        break;
      }
      step *= 0.5;
    }
  }
  if (norm <= opts.tol) return x;
  throw MaxIterations("implicit_solve: residual " + std::to_string(norm) + " after " +
                      std::to_string(opts.max_iter) + " Newton iterations");
}

inline TargetPoint implicit_solve(const LevelSetFunction& f, const BasePoint& m,
                                  const NewtonOptions& opts = {}) {
  m.check(f.splitting());
  return {implicit_solve_flat(f, m.flat(), opts)};
}

/// The graph function phi defined implicitly by f(i(m) . j(phi(m))) = 0.
/// Each evaluation solves from the same start point, so values do not depend
/// on evaluation order. Derivatives follow from the implicit function theorem.
inline GraphFunction implicit_graph(const LevelSetFunction& f, const Box& domain,
                                    const NewtonOptions& opts = {}) {
  const Splitting s = f.splitting();
  auto fp = std::make_shared<const LevelSetFunction>(f);
  const auto k = static_cast<std::size_t>(s.k());
  std::vector<ScalarField> comps;
  for (std::size_t i = 0; i < k; ++i) {
    auto fn = [fp, opts, i](std::span<const double> m) {
      // One-entry cache so the k components share a solve.
      thread_local const LevelSetFunction* last_f = nullptr;
      thread_local std::vector<double> last_m, last_x;
      if (last_f != fp.get() || !std::equal(m.begin(), m.end(), last_m.begin(), last_m.end())) {
        last_x = implicit_solve_flat(*fp, m, opts);
        last_m.assign(m.begin(), m.end());
        last_f = fp.get();
      }
      return last_x[i];
    };
    FunctionFieldImpl::DualFn dual;
    bool all_dual = true;
    for (const auto& c : f.components()) all_dual = all_dual && c.has_dual();
    if (all_dual) {
      dual = [fp, opts, i, s](std::span<const Dual> md) {
        std::vector<double> m(md.size()), dm(md.size());
        for (std::size_t c = 0; c < md.size(); ++c) {
          m[c] = md[c].v;
          dm[c] = md[c].d;
        }
        const auto x = implicit_solve_flat(*fp, m, opts);
        std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);
        detail::graph_point_raw(s, m.data(), x.data(), p.data());
        const Eigen::MatrixXd X = fp->Xf(GroupPoint(p));
        // d/ds f(i(m + s dm) . j(x)) with x frozen
        std::vector<Dual> pd(p.size());
        {
          std::vector<Dual> mdual(m.size());
          for (std::size_t c = 0; c < m.size(); ++c) mdual[c] = Dual(m[c], dm[c]);
          const int n = s.n(), k = s.k(), o = s.outer();
          for (int j = 0; j < k; ++j) {
            pd[static_cast<std::size_t>(j)] = Dual(x[static_cast<std::size_t>(j)]);
            pd[static_cast<std::size_t>(n + j)] = mdual[static_cast<std::size_t>(o + j)];
          }
          for (int l = 0; l < o; ++l) {
            pd[static_cast<std::size_t>(k + l)] = mdual[static_cast<std::size_t>(l)];
            pd[static_cast<std::size_t>(n + k + l)] = mdual[static_cast<std::size_t>(n + l)];
          }
          Dual t = mdual.back();
          for (int j = 0; j < k; ++j)
            t = t - Dual(0.5 * x[static_cast<std::size_t>(j)]) * mdual[static_cast<std::size_t>(o + j)];
          pd.back() = t;
        }
        Eigen::VectorXd g(X.rows());
        for (Eigen::Index r = 0; r < X.rows(); ++r)
          g(r) = fp->components()[static_cast<std::size_t>(r)].eval_dual(pd).d;
        const Eigen::VectorXd dx = X.partialPivLu().solve(-g);
        return Dual(x[i], dx(static_cast<Eigen::Index>(i)));
      };
    }
    comps.push_back(ScalarField::from_function(s.base_dim(), fn, std::nullopt, Smoothness::Smooth, dual));
  }
  return GraphFunction(s, std::move(comps), domain);
}

struct ApproxOptions {
  /// Base grid nodes per axis; 0 picks 33 for base dimension <= 3, else 9.
  int grid_nodes = 0;
  /// Mollifier lattice steps per radius; 0 picks the default for the dimension.
  int mollifier_resolution = 0;
  /// Extra margin of the group box around the sampled graph, beyond the
  /// largest epsilon.
  double box_margin = 0.25;
  NewtonOptions newton;
};

struct ApproxLevel {
  double eps = 0.0;
  bool ok = true;
  std::string status = "ok";
  double sup_phi_gap = std::numeric_limits<double>::quiet_NaN();
  double sup_jac_gap = std::numeric_limits<double>::quiet_NaN();
  double min_det = std::numeric_limits<double>::quiet_NaN();
  double max_residual = std::numeric_limits<double>::quiet_NaN();
  std::optional<LevelSetFunction> f_eps;
  /// phi_eps and J^{phi_eps} phi_eps at the grid nodes, node-major.
  std::vector<std::vector<double>> phi;
  std::vector<IntrinsicJacobian> jac;
};

struct ApproxFamily {
  Box grid_box;
  int grid_nodes = 0;
  Box group_box;
  std::vector<std::vector<double>> nodes;  // base grid in sweep order
  std::vector<ApproxLevel> levels;

  std::vector<double> epsilons() const {
    std::vector<double> e;
    for (const auto& l : levels) e.push_back(l.eps);
    return e;
  }
  std::vector<double> sup_phi_gap() const {
    std::vector<double> e;
    for (const auto& l : levels) e.push_back(l.sup_phi_gap);
    return e;
  }
  std::vector<double> sup_jac_gap() const {
    std::vector<double> e;
    for (const auto& l : levels) e.push_back(l.sup_jac_gap);
    return e;
  }
};

namespace detail {

// Tensor grid in boustrophedon order: consecutive nodes are neighbours.
inline std::vector<std::vector<double>> serpentine_grid(const Box& box, int nodes) {
  const std::size_t d = box.dim();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(nodes);
  std::vector<std::vector<double>> out;
  out.reserve(total);
  std::vector<int> idx(d, 0);
  std::vector<int> dir(d, 1);
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i)
      x[i] = box.lo(i) + box.side(i) * static_cast<double>(idx[i]) / (nodes - 1);
    out.push_back(std::move(x));
    // advance the last axis fastest, reflecting direction on wrap
    for (std::size_t a = d; a-- > 0;) {
      const int nxt = idx[a] + dir[a];
      if (nxt >= 0 && nxt < nodes) {
        idx[a] = nxt;
        break;
      }
      dir[a] = -dir[a];
    }
  }
  return out;
}

}  // namespace detail

/// For each eps: mollify f on a group box, solve for phi_eps on a base grid
/// with warm starts, and compare phi_eps and its level-set Jacobian with the
/// reference graph phi and reference Jacobian.
inline ApproxFamily approx_family(const LevelSetFunction& f, const GraphFunction& reference,
                                  const std::vector<double>& epsilons, const Box& grid_box,
                                  const ApproxOptions& opts = {}) {
  const Splitting& s = f.splitting();
  if (!(reference.splitting() == s)) throw DimensionError("approx_family: splittings differ");
  if (grid_box.dim() != s.base_dim()) throw DimensionError("approx_family: grid box has wrong dimension");
  check_radii(epsilons);
  if (!reference.domain().contains_box(grid_box))
    throw DomainError("approx_family: grid box must lie inside the reference domain");

  ApproxFamily fam;
  fam.grid_box = grid_box;
  fam.grid_nodes = opts.grid_nodes > 0 ? opts.grid_nodes : (s.base_dim() <= 3 ? 33 : 9);
  if (fam.grid_nodes < 2) throw DomainError("approx_family: need at least 2 grid nodes per axis");
  fam.nodes = detail::serpentine_grid(grid_box, fam.grid_nodes);
  const std::size_t N = fam.nodes.size();
  const auto k = static_cast<std::size_t>(s.k());
  const std::size_t gd = 2 * static_cast<std::size_t>(s.n()) + 1;

  // Reference values and Jacobians (level-set side of the unmollified f).
  std::vector<std::vector<double>> ref_phi(N);
  std::vector<IntrinsicJacobian> ref_jac(N);
  std::vector<double> lo(gd, std::numeric_limits<double>::infinity());
  std::vector<double> hi(gd, -std::numeric_limits<double>::infinity());
  std::vector<double> p(gd);
  for (std::size_t i = 0; i < N; ++i) {
    ref_phi[i] = reference.eval(fam.nodes[i]);
    detail::graph_point_raw(s, fam.nodes[i].data(), ref_phi[i].data(), p.data());
    ref_jac[i] = jacobian_from_levelset(f, GroupPoint(p)).J;
    for (std::size_t c = 0; c < gd; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  // The first Newton solve starts from x0 (default 0), so its point must lie
  // inside the mollified box too.
  {
    std::vector<double> x0 = opts.newton.x0.empty() ? std::vector<double>(k, 0.0) : opts.newton.x0;
    if (x0.size() != k) throw DimensionError("approx_family: Newton start must have length k");
    detail::graph_point_raw(s, fam.nodes.front().data(), x0.data(), p.data());
    for (std::size_t c = 0; c < gd; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  if (f.box()) {
    fam.group_box = *f.box();
  } else {
    const double pad = epsilons.front() + opts.box_margin;
    for (std::size_t c = 0; c < gd; ++c) {
      lo[c] -= pad;
      hi[c] += pad;
    }
    fam.group_box = Box(lo, hi);
  }

  for (double eps : epsilons) {
    ApproxLevel L;
    L.eps = eps;
    try {
      L.f_eps = mollify(f, eps, fam.group_box, opts.mollifier_resolution);
      const LevelSetFunction& fe = *L.f_eps;
      NewtonOptions no = opts.newton;
      std::vector<double> prev = no.x0.empty() ? std::vector<double>(k, 0.0) : no.x0;
      L.phi.resize(N);
      L.jac.resize(N);
      L.sup_phi_gap = 0.0;
      L.sup_jac_gap = 0.0;
      L.min_det = std::numeric_limits<double>::infinity();
      L.max_residual = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        no.x0 = prev;
        L.phi[i] = implicit_solve_flat(fe, fam.nodes[i], no);
        prev = L.phi[i];
        detail::graph_point_raw(s, fam.nodes[i].data(), L.phi[i].data(), p.data());
        const GroupPoint gp(p);
        L.max_residual = std::max(L.max_residual, detail::inf_norm(fe.eval(gp)));
        const auto lj = jacobian_from_levelset(fe, gp);
        L.jac[i] = lj.J;
        L.min_det = std::min(L.min_det, lj.delta);
        for (std::size_t c = 0; c < k; ++c)
          L.sup_phi_gap = std::max(L.sup_phi_gap, std::abs(L.phi[i][c] - ref_phi[i][c]));
        L.sup_jac_gap = std::max(L.sup_jac_gap, (lj.J - ref_jac[i]).cwiseAbs().maxCoeff());
      }
    } catch (const NumericalError& e) {
      L.ok = false;
      L.status = e.what();
      L.phi.clear();
      L.jac.clear();
    }
    fam.levels.push_back(std::move(L));
  }
  return fam;
}

/// Graph-function source: lift to f = x - phi(m(p)) first.
inline ApproxFamily approx_family(const GraphFunction& phi, const std::vector<double>& epsilons,
                                  const Box& grid_box, const ApproxOptions& opts = {}) {
  return approx_family(LevelSetFunction::lift(phi), phi, epsilons, grid_box, opts);
}

}  // namespace hcalc
