#pragma once

// The splitting H^n = M . H with H = exp(span{X_1..X_k}) horizontal and M
// its normal complement, base coordinates (v_{k+1..n}, eta_{1..k},
// w_{k+1..n}, tau), intrinsic graphs over M and the graph distances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/error.hpp"
#include "hcalc/field.hpp"
#include "hcalc/hgroup.hpp"
#include "hcalc/lowdisc.hpp"

namespace hcalc {

class Splitting {
 public:
  Splitting(int n, int k) : n_(n), k_(k) {
    if (n < 1 || k < 1 || k > n)
      throw DomainError("splitting requires 1 <= k <= n, got n=" + std::to_string(n) +
                        ", k=" + std::to_string(k));
  }
  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  /// n - k, the length of the v and w blocks.
  int outer() const noexcept { return n_ - k_; }
  /// 2n + 1 - k
  std::size_t base_dim() const noexcept { return static_cast<std::size_t>(2 * n_ + 1 - k_); }
  /// 2n - k, the number of W fields and columns of the intrinsic Jacobian.
  std::size_t fields() const noexcept { return static_cast<std::size_t>(2 * n_ - k_); }
  HDim hdim() const { return HDim(n_); }

  /// v{k+1}..vn, eta1..etak, w{k+1}..wn, tau
  std::vector<std::string> base_vars() const {
    std::vector<std::string> out;
    for (int j = k_ + 1; j <= n_; ++j) out.push_back("v" + std::to_string(j));
    for (int j = 1; j <= k_; ++j) out.push_back("eta" + std::to_string(j));
    for (int j = k_ + 1; j <= n_; ++j) out.push_back("w" + std::to_string(j));
    out.push_back("tau");
    return out;
  }

  /// x1..xn, y1..yn, t
  std::vector<std::string> group_vars() const {
    std::vector<std::string> out;
    for (int j = 1; j <= n_; ++j) out.push_back("x" + std::to_string(j));
    for (int j = 1; j <= n_; ++j) out.push_back("y" + std::to_string(j));
    out.push_back("t");
    return out;
  }

  // Offsets of the blocks inside a flat base vector.
  std::size_t eta_offset() const noexcept { return static_cast<std::size_t>(outer()); }
  std::size_t w_offset() const noexcept { return static_cast<std::size_t>(n_); }
  std::size_t tau_offset() const noexcept { return base_dim() - 1; }

  friend bool operator==(const Splitting&, const Splitting&) = default;

 private:
  int n_;
  int k_;
};

struct BasePoint {
  std::vector<double> v;
  std::vector<double> eta;
  std::vector<double> w;
  double tau = 0.0;

  static BasePoint origin(const Splitting& s) {
    return {std::vector<double>(static_cast<std::size_t>(s.outer()), 0.0),
            std::vector<double>(static_cast<std::size_t>(s.k()), 0.0),
            std::vector<double>(static_cast<std::size_t>(s.outer()), 0.0), 0.0};
  }

  static BasePoint from_flat(const Splitting& s, std::span<const double> p) {
    if (p.size() != s.base_dim())
      throw DimensionError("BasePoint: expected " + std::to_string(s.base_dim()) +
                           " coordinates, got " + std::to_string(p.size()));
    for (double x : p)
      if (!std::isfinite(x)) throw DomainError("BasePoint: non-finite coordinate");
    const auto o = static_cast<std::size_t>(s.outer());
    const auto k = static_cast<std::size_t>(s.k());
    BasePoint m;
    m.v.assign(p.begin(), p.begin() + o);
    m.eta.assign(p.begin() + o, p.begin() + o + k);
    m.w.assign(p.begin() + o + k, p.begin() + 2 * o + k);
    m.tau = p.back();
    return m;
  }

  std::vector<double> flat() const {
    std::vector<double> p;
    p.reserve(v.size() + eta.size() + w.size() + 1);
    p.insert(p.end(), v.begin(), v.end());
    p.insert(p.end(), eta.begin(), eta.end());
    p.insert(p.end(), w.begin(), w.end());
    p.push_back(tau);
    return p;
  }

  void check(const Splitting& s) const {
    if (v.size() != static_cast<std::size_t>(s.outer()) ||
        w.size() != static_cast<std::size_t>(s.outer()) ||
        eta.size() != static_cast<std::size_t>(s.k()))
      throw DimensionError("BasePoint: block lengths do not match the splitting");
  }

  friend bool operator==(const BasePoint&, const BasePoint&) = default;
};

struct TargetPoint {
  std::vector<double> h;
  friend bool operator==(const TargetPoint&, const TargetPoint&) = default;
};

// Flat-array kernels. `m` has length 2n+1-k, `p` has length 2n+1.
namespace detail {

inline void embed_i_raw(const Splitting& s, const double* m, double* p) {
  const int n = s.n(), k = s.k(), o = s.outer();
  for (int j = 0; j < k; ++j) {
    p[j] = 0.0;
    p[n + j] = m[o + j];
  }
  for (int l = 0; l < o; ++l) {
    p[k + l] = m[l];
    p[n + k + l] = m[n + l];
  }
  p[2 * n] = m[2 * n - k];
}

// i(m) . j(h)
inline void graph_point_raw(const Splitting& s, const double* m, const double* h, double* p) {
  embed_i_raw(s, m, p);
  const int n = s.n();
  double corr = 0.0;
  for (int j = 0; j < s.k(); ++j) {
    p[j] = h[j];
    corr += h[j] * p[n + j];
  }
  p[2 * n] -= 0.5 * corr;
}

inline double sigma_raw(const double* v, const double* w, const double* vp, const double* wp,
                        int len) {
  double s = 0.0;
  for (int l = 0; l < len; ++l) s += v[l] * wp[l] - vp[l] * w[l];
  return 0.5 * s;
}

// max{|xi|, |tau - tau' + sum_j c_j (eta'_j - eta_j) + sigma|^{1/2}}
inline double graph_gauge_raw(const Splitting& s, const double* a, const double* b,
                              const double* c) {
  const std::size_t hd = s.fields();
  double xi2 = 0.0;
  for (std::size_t i = 0; i < hd; ++i) {
    const double d = a[i] - b[i];
    xi2 += d * d;
  }
  const std::size_t eo = s.eta_offset(), wo = s.w_offset(), to = s.tau_offset();
  double vert = a[to] - b[to];
  for (int j = 0; j < s.k(); ++j) vert += c[j] * (b[eo + j] - a[eo + j]);
  vert += sigma_raw(a, a + wo, b, b + wo, s.outer());
  return std::max(std::sqrt(xi2), std::sqrt(std::abs(vert)));
}

}  // namespace detail

inline GroupPoint embed_i(const Splitting& s, const BasePoint& m) {
  m.check(s);
  const auto f = m.flat();
  std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);
  detail::embed_i_raw(s, f.data(), p.data());
  return GroupPoint(std::move(p));
}

inline GroupPoint embed_j(const Splitting& s, const TargetPoint& h) {
  if (h.h.size() != static_cast<std::size_t>(s.k()))
    throw DimensionError("embed_j: target point must have length k");
  std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1, 0.0);
  for (int j = 0; j < s.k(); ++j) {
    if (!std::isfinite(h.h[static_cast<std::size_t>(j)])) throw DomainError("embed_j: non-finite entry");
    p[static_cast<std::size_t>(j)] = h.h[static_cast<std::size_t>(j)];
  }
  return GroupPoint(std::move(p));
}

/// Unique factorization p = i(m) . j(h).
inline std::pair<BasePoint, TargetPoint> split_point(const Splitting& s, const GroupPoint& p) {
  if (p.n() != s.n()) throw DimensionError("split_point: group dimension does not match splitting");
  const int n = s.n(), k = s.k();
  TargetPoint h;
  BasePoint m;
  double tau = p.t();
  for (int j = 0; j < k; ++j) {
    h.h.push_back(p.x(j));
    m.eta.push_back(p.y(j));
    tau += 0.5 * p.x(j) * p.y(j);
  }
  for (int j = k; j < n; ++j) {
    m.v.push_back(p.x(j));
    m.w.push_back(p.y(j));
  }
  m.tau = tau;
  return {std::move(m), std::move(h)};
}

/// i^{-1}(i(a) . i(b))
inline BasePoint star_product(const Splitting& s, const BasePoint& a, const BasePoint& b) {
  a.check(s);
  b.check(s);
  BasePoint r = a;
  for (std::size_t l = 0; l < r.v.size(); ++l) {
    r.v[l] += b.v[l];
    r.w[l] += b.w[l];
  }
  for (std::size_t j = 0; j < r.eta.size(); ++j) r.eta[j] += b.eta[j];
  r.tau = a.tau + b.tau +
          detail::sigma_raw(a.v.data(), a.w.data(), b.v.data(), b.w.data(), s.outer());
  return r;
}

/// Inverse in (M, star): plain negation.
inline BasePoint star_inverse(const BasePoint& a) {
  BasePoint r = a;
  for (double& x : r.v) x = -x;
  for (double& x : r.eta) x = -x;
  for (double& x : r.w) x = -x;
  r.tau = -r.tau;
  return r;
}

/// norm_inf of i(m).
inline double base_norm(const Splitting& s, const BasePoint& m) {
  return norm_inf(embed_i(s, m));
}

inline double sigma_term(std::span<const double> v, std::span<const double> w,
                         std::span<const double> vp, std::span<const double> wp) {
  if (v.size() != w.size() || v.size() != vp.size() || v.size() != wp.size())
    throw DimensionError("sigma_term: blocks must have equal lengths");
  return detail::sigma_raw(v.data(), w.data(), vp.data(), wp.data(), static_cast<int>(v.size()));
}

/// phi : Omega subset of M -> H, one scalar field per target coordinate.
class GraphFunction {
 public:
  GraphFunction(Splitting s, std::vector<ScalarField> components, Box domain)
      : s_(s), comp_(std::move(components)), domain_(std::move(domain)) {
    if (comp_.size() != static_cast<std::size_t>(s_.k()))
      throw DimensionError("GraphFunction: expected " + std::to_string(s_.k()) +
                           " components, got " + std::to_string(comp_.size()));
    if (domain_.dim() != s_.base_dim())
      throw DimensionError("GraphFunction: domain box must have dimension 2n+1-k");
    for (const auto& c : comp_) {
      if (!c.valid() || c.arity() != s_.base_dim())
        throw DimensionError("GraphFunction: component arity must be 2n+1-k");
      if (const Box* b = c.domain(); b && !b->contains_box(domain_))
        throw DomainError("GraphFunction: component is not defined on the whole domain");
    }
  }

  /// Parses one expression per component over the base variables.
  static GraphFunction parse(Splitting s, const std::vector<std::string>& texts, Box domain) {
    std::vector<ScalarField> comps;
    const auto vars = s.base_vars();
    for (const auto& t : texts) comps.push_back(ScalarField::parse(t, vars));
    return GraphFunction(s, std::move(comps), std::move(domain));
  }

  static GraphFunction constant(Splitting s, const std::vector<double>& c, Box domain) {
    std::vector<ScalarField> comps;
    const auto vars = s.base_vars();
    for (double x : c) comps.push_back(ScalarField::from_expr(Expr::constant(x, vars)));
    return GraphFunction(s, std::move(comps), std::move(domain));
  }

  const Splitting& splitting() const noexcept { return s_; }
  const Box& domain() const noexcept { return domain_; }
  const std::vector<ScalarField>& components() const noexcept { return comp_; }
  const ScalarField& component(std::size_t i) const { return comp_.at(i); }
  std::size_t k() const noexcept { return comp_.size(); }

  bool contains(std::span<const double> m) const {
    double tol = 0.0;
    for (std::size_t i = 0; i < domain_.dim(); ++i) tol = std::max(tol, domain_.side(i));
    return domain_.contains(m, 1e-12 * tol);
  }

  void require_inside(std::span<const double> m, const char* op) const {
    if (!contains(m)) throw DomainError(std::string(op) + ": point outside the graph domain");
  }

  void eval_into(std::span<const double> m, double* out) const {
    require_inside(m, "phi");
    for (std::size_t i = 0; i < comp_.size(); ++i) out[i] = comp_[i](m);
  }

  std::vector<double> eval(std::span<const double> m) const {
    std::vector<double> out(comp_.size());
    eval_into(m, out.data());
    return out;
  }

  TargetPoint operator()(const BasePoint& m) const { return {eval(m.flat())}; }

 private:
  Splitting s_;
  std::vector<ScalarField> comp_;
  Box domain_;
};

/// Phi(m) = i(m) . j(phi(m))
inline GroupPoint graph_map(const GraphFunction& phi, const BasePoint& m) {
  const Splitting& s = phi.splitting();
  m.check(s);
  const auto f = m.flat();
  const auto h = phi.eval(f);
  std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);
  detail::graph_point_raw(s, f.data(), h.data(), p.data());
  return GroupPoint(std::move(p));
}

inline double graph_dist_flat(const GraphFunction& phi, std::span<const double> a,
                              std::span<const double> b) {
  const auto pb = phi.eval(b);
  phi.require_inside(a, "graph_dist");
  return detail::graph_gauge_raw(phi.splitting(), a.data(), b.data(), pb.data());
}

/// d_phi(a, b) = || pi_M(Phi(b)^{-1} . Phi(a)) ||_inf in closed form.
inline double graph_dist(const GraphFunction& phi, const BasePoint& a, const BasePoint& b) {
  a.check(phi.splitting());
  b.check(phi.splitting());
  return graph_dist_flat(phi, a.flat(), b.flat());
}

/// The same quantity through the group product and split_point.
inline double graph_dist_abstract(const GraphFunction& phi, const BasePoint& a,
                                  const BasePoint& b) {
  const GroupPoint q = product(inverse(graph_map(phi, b)), graph_map(phi, a));
  return base_norm(phi.splitting(), split_point(phi.splitting(), q).first);
}

/// D_phi: average of d_phi(a, b) and d_phi(b, a).
inline double sym_graph_dist(const GraphFunction& phi, const BasePoint& a, const BasePoint& b) {
  return 0.5 * (graph_dist(phi, a, b) + graph_dist(phi, b, a));
}

inline double rho_dist_flat(const GraphFunction& phi, std::span<const double> a,
                            std::span<const double> b) {
  const auto pa = phi.eval(a);
  auto c = phi.eval(b);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = 0.5 * (c[j] + pa[j]);
  return detail::graph_gauge_raw(phi.splitting(), a.data(), b.data(), c.data());
}

/// rho_phi: d_phi with phi(b) replaced by the average of phi(a) and phi(b).
inline double rho_dist(const GraphFunction& phi, const BasePoint& a, const BasePoint& b) {
  a.check(phi.splitting());
  b.check(phi.splitting());
  return rho_dist_flat(phi, a.flat(), b.flat());
}

/// Low-discrepancy sample of `count` points of a box.
inline std::vector<std::vector<double>> sample_box(const Box& box, std::size_t count,
                                                   std::uint64_t seed) {
  Halton seq(box.dim(), seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  std::vector<double> u(box.dim());
  for (std::size_t i = 0; i < count; ++i) {
    seq.fill(i, u.data());
    out.push_back(box.at(u));
  }
  return out;
}

struct LipschitzReport {
  std::size_t pairs = 0;
  double lip = 0.0;          // sup |phi(a) - phi(b)| / d_phi(a, b)
  double c0_lo = 0.0;        // inf ||m . h|| / (||m|| + ||h||)
  double c0_hi = 0.0;        // sup of the same ratio
  double rho_over_d = 0.0;   // sup rho_phi / d_phi
  double holder_c1 = 0.0;    // inf d_phi / ||b^{-1} * a||^2
  double holder_c2 = 0.0;    // sup d_phi / ||b^{-1} * a||^{1/2}
};

/// Empirical constants over all ordered pairs of distinct sample points.
/// Target points for the product-norm bracket come from a seeded sequence in
/// [-1, 1]^k.
inline LipschitzReport lipschitz_report(const GraphFunction& phi,
                                        const std::vector<BasePoint>& samples,
                                        std::uint64_t seed = 1) {
  const Splitting& s = phi.splitting();
  if (samples.size() < 2) throw EmptySample("lipschitz_report: need at least 2 sample points");
  std::vector<std::vector<double>> flat, val;
  std::vector<GroupPoint> emb;
  for (const auto& m : samples) {
    m.check(s);
    flat.push_back(m.flat());
    val.push_back(phi.eval(flat.back()));
    emb.push_back(embed_i(s, m));
  }
  LipschitzReport r;
  r.c0_lo = std::numeric_limits<double>::infinity();
  r.holder_c1 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = 0; j < flat.size(); ++j) {
      if (i == j) continue;
      const double d = detail::graph_gauge_raw(s, flat[i].data(), flat[j].data(), val[j].data());
      if (d <= 0.0) continue;
      ++r.pairs;
      double diff2 = 0.0;
      for (std::size_t c = 0; c < val[i].size(); ++c) {
        const double e = val[i][c] - val[j][c];
        diff2 += e * e;
      }
      r.lip = std::max(r.lip, std::sqrt(diff2) / d);
      r.rho_over_d = std::max(r.rho_over_d, rho_dist_flat(phi, flat[i], flat[j]) / d);
      const double nm = dist_inf(emb[i], emb[j]);
      if (nm > 0.0) {
        r.holder_c1 = std::min(r.holder_c1, d / (nm * nm));
        r.holder_c2 = std::max(r.holder_c2, d / std::sqrt(nm));
      }
    }
  }
  if (r.pairs == 0) throw EmptySample("lipschitz_report: all sample points coincide");

  Halton hs(static_cast<std::size_t>(s.k()), seed);
  std::vector<double> u(static_cast<std::size_t>(s.k()));
  for (std::size_t i = 0; i < emb.size(); ++i) {
    hs.fill(i, u.data());
    TargetPoint h;
    double hn2 = 0.0;
    for (double x : u) {
      h.h.push_back(2.0 * x - 1.0);
      hn2 += h.h.back() * h.h.back();
    }
    const double denom = norm_inf(emb[i]) + std::sqrt(hn2);
    if (denom <= 0.0) continue;
    const double ratio = norm_inf(product(emb[i], embed_j(s, h))) / denom;
    r.c0_lo = std::min(r.c0_lo, ratio);
    r.c0_hi = std::max(r.c0_hi, ratio);
  }
  if (!std::isfinite(r.c0_lo)) r.c0_lo = 0.0;
  if (!std::isfinite(r.holder_c1)) r.holder_c1 = 0.0;
  return r;
}

}  // namespace hcalc
