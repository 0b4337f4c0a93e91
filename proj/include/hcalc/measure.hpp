#pragma once

// Hausdorff-type premeasure estimates from explicit covers of sampled sets,
// and the area of intrinsic graphs by quadrature of the minor-sum integrand.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/error.hpp"
#include "hcalc/hgroup.hpp"
#include "hcalc/intrinsic.hpp"
#include "hcalc/levelset.hpp"
#include "hcalc/lowdisc.hpp"
#include "hcalc/parallel.hpp"
#include "hcalc/split.hpp"

namespace hcalc {

/// pi^{m/2} / Gamma(m/2 + 1) * 2^{-m}
inline double beta_const(double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("beta_const: m must be >= 0");
  return std::pow(M_PI, 0.5 * m) / std::tgamma(0.5 * m + 1.0) * std::pow(2.0, -m);
}

enum class MeasureKind { Hausdorff, Spherical, Centered };

inline const char* to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::Hausdorff: return "hausdorff";
    case MeasureKind::Spherical: return "spherical";
    case MeasureKind::Centered: return "centered";
  }
  return "";
}

struct MeasureFamily {
  MeasureKind kind = MeasureKind::Spherical;
  double m = 0.0;
  double beta() const { return beta_const(m); }
};

// ---------------------------------------------------------------------------
// Set samplers

/// Flat array of group points, 2n+1 doubles each.
struct PointCloud {
  int n = 1;
  std::vector<double> data;
  std::size_t dim() const noexcept { return 2 * static_cast<std::size_t>(n) + 1; }
  std::size_t size() const noexcept { return data.size() / dim(); }
  const double* point(std::size_t i) const { return data.data() + i * dim(); }
};

/// Produces sample points of a set at a density adapted to covering radius
/// r: consecutive samples at most r/8 apart horizontally and r^2/8 apart
/// vertically.
class SetSampler {
 public:
  virtual ~SetSampler() = default;
  virtual int n() const = 0;
  virtual PointCloud sample(double r) const = 0;
  /// True when the set is empty by construction.
  virtual bool known_empty() const { return false; }
  virtual std::string describe() const = 0;
};

class EmptySet final : public SetSampler {
 public:
  explicit EmptySet(int n) : n_(n) {}
  int n() const override { return n_; }
  PointCloud sample(double) const override { return PointCloud{n_, {}}; }
  bool known_empty() const override { return true; }
  std::string describe() const override { return "empty"; }

 private:
  int n_;
};

class PointSet final : public SetSampler {
 public:
  explicit PointSet(std::vector<GroupPoint> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw EmptySample("PointSet: no points");
    for (const auto& p : pts_)
      if (p.n() != pts_[0].n()) throw DimensionError("PointSet: mixed dimensions");
  }
  int n() const override { return pts_[0].n(); }
  PointCloud sample(double) const override {
    PointCloud c{n(), {}};
    for (const auto& p : pts_) c.data.insert(c.data.end(), p.coords().begin(), p.coords().end());
    return c;
  }
  std::string describe() const override { return "points"; }

 private:
  std::vector<GroupPoint> pts_;
};

namespace detail {

inline int axis_count(double extent, double spacing) {
  if (extent <= 0.0) return 1;
  return std::max(2, static_cast<int>(std::ceil(extent / spacing - 1e-9)) + 1);
}

// Tensor grid over a box with per-axis node counts; calls fn(point).
template <class F>
void for_each_grid_point(const std::vector<double>& lo, const std::vector<double>& hi,
                         const std::vector<int>& counts, F&& fn) {
  const std::size_t d = lo.size();
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (;;) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = counts[i] == 1 ? lo[i] : lo[i] + (hi[i] - lo[i]) * idx[i] / (counts[i] - 1);
    fn(x);
    std::size_t a = d;
    while (a-- > 0) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
}

}  // namespace detail

/// Coordinate box in H^n; degenerate (zero-width) axes are allowed.
class BoxSet final : public SetSampler {
 public:
  BoxSet(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.size() < 3 || lo_.size() % 2 == 0)
      throw DimensionError("BoxSet: bounds must have length 2n+1");
    for (std::size_t i = 0; i < lo_.size(); ++i)
      if (!(lo_[i] <= hi_[i])) throw DomainError("BoxSet: lo > hi");
  }
  int n() const override { return static_cast<int>((lo_.size() - 1) / 2); }
  PointCloud sample(double r) const override {
    std::vector<int> counts(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      const double sp = i + 1 == lo_.size() ? r * r / 8.0 : r / 8.0;
      counts[i] = detail::axis_count(hi_[i] - lo_[i], sp);
    }
    PointCloud c{n(), {}};
    detail::for_each_grid_point(lo_, hi_, counts,
                                [&](const std::vector<double>& x) { c.data.insert(c.data.end(), x.begin(), x.end()); });
    return c;
  }
  std::string describe() const override { return "box"; }

 private:
  std::vector<double> lo_, hi_;
};

/// Phi(Omega) for a graph function over its domain box (or a sub-box).
class GraphSet final : public SetSampler {
 public:
  GraphSet(GraphFunction phi, std::optional<Box> region = std::nullopt)
      : phi_(std::move(phi)), region_(region ? *region : phi_.domain()) {
    if (!phi_.domain().contains_box(region_)) throw DomainError("GraphSet: region outside the domain");
  }
  int n() const override { return phi_.splitting().n(); }
  PointCloud sample(double r) const override {
    const Splitting& s = phi_.splitting();
    std::vector<int> counts(s.base_dim());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double sp = i + 1 == counts.size() ? r * r / 8.0 : r / 8.0;
      counts[i] = detail::axis_count(region_.side(i), sp);
    }
    PointCloud c{n(), {}};
    std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);
    std::vector<double> h(static_cast<std::size_t>(s.k()));
    detail::for_each_grid_point(region_.lo(), region_.hi(), counts, [&](const std::vector<double>& m) {
      phi_.eval_into(m, h.data());
      detail::graph_point_raw(s, m.data(), h.data(), p.data());
      c.data.insert(c.data.end(), p.begin(), p.end());
    });
    return c;
  }
  std::string describe() const override { return "graph"; }

 private:
  GraphFunction phi_;
  Box region_;
};

/// Parametric curve gamma : [t0, t1] -> H^n, sampled uniformly and refined
/// until consecutive samples meet the spacing rule.
class CurveSet final : public SetSampler {
 public:
  using Fn = std::function<GroupPoint(double)>;
  CurveSet(int n, Fn gamma, double t0, double t1) : n_(n), gamma_(std::move(gamma)), t0_(t0), t1_(t1) {
    if (!(t0 <= t1)) throw DomainError("CurveSet: t0 > t1");
  }
  int n() const override { return n_; }
  PointCloud sample(double r) const override {
    std::size_t N = 16;
    for (int iter = 0; iter < 40; ++iter) {
      PointCloud c{n_, {}};
      bool ok = true;
      std::vector<double> prev;
      for (std::size_t i = 0; i <= N; ++i) {
        const double t = t1_ == t0_ ? t0_ : t0_ + (t1_ - t0_) * static_cast<double>(i) / N;
        const GroupPoint g = gamma_(t);
        if (g.n() != n_) throw DimensionError("CurveSet: curve has the wrong dimension");
        const auto cs = g.coords();
        if (!prev.empty() && ok) {
          double h2 = 0.0, cross = 0.0;
          for (int j = 0; j < n_; ++j) {
            const double dx = cs[j] - prev[j], dy = cs[n_ + j] - prev[n_ + j];
            h2 += dx * dx + dy * dy;
            cross += cs[j] * prev[n_ + j] - prev[j] * cs[n_ + j];
          }
          const double vert = std::abs(cs[2 * n_] - prev[2 * n_] + 0.5 * cross);
          if (std::sqrt(h2) > r / 8.0 || vert > r * r / 8.0) ok = false;
        }
        prev.assign(cs.begin(), cs.end());
        c.data.insert(c.data.end(), cs.begin(), cs.end());
        if (t1_ == t0_) break;
      }
      if (ok) return c;
      N *= 2;
    }
    throw NumericalError("CurveSet: could not meet the sampling density");
  }
  std::string describe() const override { return "curve"; }

 private:
  int n_;
  Fn gamma_;
  double t0_, t1_;
};

// ---------------------------------------------------------------------------
// Covers

struct CoverElement {
  std::vector<double> center;  // ball centre, or box corner c
  double radius = 0.0;         // balls only
  std::vector<double> sides;   // boxes only: a_1..a_2n, b
  double diam = 0.0;
};

struct CoveringEstimate {
  double value = 0.0;
  double delta = 0.0;
  std::size_t cover_size = 0;
  MeasureFamily family;
  std::string strategy;
  std::size_t samples = 0;
  std::vector<CoverElement> cover;
};

namespace detail {

// Points bucketed by horizontal cell; inside a cell they are sorted by the
// vertical coordinate of z^{-1} p, z the cell centre, so a d_inf ball query
// scans a bounded window of each neighbouring cell.
class BallIndex {
 public:
  static constexpr int kMaxAxes = 16;

  BallIndex(const PointCloud& pc, double cell) : pc_(pc), n_(pc.n), cell_(cell) {
    if (2 * n_ > kMaxAxes) throw DimensionError("BallIndex: n must be <= 8");
    const std::size_t N = pc.size();
    const std::size_t D = pc.dim();
    const int H = 2 * n_;
    origin_.assign(static_cast<std::size_t>(H), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < N; ++i)
      for (int a = 0; a < H; ++a) origin_[a] = std::min(origin_[a], pc.point(i)[a]);

    std::vector<std::uint32_t> cell_of(N);
    std::vector<std::int64_t> key(static_cast<std::size_t>(H));
    for (std::size_t i = 0; i < N; ++i) {
      key_of(pc.point(i), key.data());
      auto [it, fresh] = lookup_.try_emplace(hash(key.data()), std::vector<std::uint32_t>{});
      std::uint32_t id = 0;
      bool found = false;
      for (std::uint32_t c : it->second)
        if (std::equal(key.begin(), key.end(), keys_.begin() + static_cast<long>(c) * H)) {
          id = c;
          found = true;
          break;
        }
      if (!found) {
        id = static_cast<std::uint32_t>(cells_.size());
        it->second.push_back(id);
        keys_.insert(keys_.end(), key.begin(), key.end());
        Cell c;
        c.centre.resize(static_cast<std::size_t>(H));
        for (int a = 0; a < H; ++a) c.centre[a] = origin_[a] + (static_cast<double>(key[a]) + 0.5) * cell_;
        cells_.push_back(std::move(c));
      }
      cell_of[i] = id;
      ++cells_[id].end;
    }
    std::size_t off = 0;
    for (auto& c : cells_) {
      c.begin = off;
      off += c.end;
      c.end = c.begin;
    }
    order_.resize(N);
    for (std::size_t i = 0; i < N; ++i) order_[cells_[cell_of[i]].end++] = static_cast<std::uint32_t>(i);
    lv_.resize(N);
    pts_.resize(N * D);
    for (auto& c : cells_) {
      // Anchor at the bounding-box midpoint of the cell's points; half[a]
      // bounds |p_a - z_a| inside the cell.
      std::vector<double> bl(static_cast<std::size_t>(H), std::numeric_limits<double>::infinity());
      std::vector<double> bh(static_cast<std::size_t>(H), -std::numeric_limits<double>::infinity());
      for (std::size_t s = c.begin; s < c.end; ++s)
        for (int a = 0; a < H; ++a) {
          bl[a] = std::min(bl[a], pc.point(order_[s])[a]);
          bh[a] = std::max(bh[a], pc.point(order_[s])[a]);
        }
      c.half.resize(static_cast<std::size_t>(H));
      for (int a = 0; a < H; ++a) {
        c.centre[a] = 0.5 * (bl[a] + bh[a]);
        c.half[a] = 0.5 * (bh[a] - bl[a]) * (1.0 + 1e-12);
      }
      std::vector<std::pair<double, std::uint32_t>> tmp;
      for (std::size_t s = c.begin; s < c.end; ++s) tmp.emplace_back(local_t(pc.point(order_[s]), c.centre.data()), order_[s]);
      std::sort(tmp.begin(), tmp.end());
      for (std::size_t s = c.begin; s < c.end; ++s) {
        lv_[s] = tmp[s - c.begin].first;
        order_[s] = tmp[s - c.begin].second;
        std::copy_n(pc.point(order_[s]), D, pts_.data() + s * D);
      }
    }
  }

  /// Calls fn(point index) for every point p with d_inf(p, c) <= r.
  template <class F>
  void query(const double* c, double r, F&& fn) const {
    const int H = 2 * n_;
    const std::size_t D = pc_.dim();
    const double r2 = r * r * (1.0 + 1e-9);
    std::array<std::int64_t, kMaxAxes> lo{}, hi{}, key{};
    for (int a = 0; a < H; ++a) {
      lo[a] = static_cast<std::int64_t>(std::floor((c[a] - r - origin_[a]) / cell_));
      hi[a] = static_cast<std::int64_t>(std::floor((c[a] + r - origin_[a]) / cell_));
      key[a] = lo[a];
    }
    for (;;) {
      if (const Cell* cl = find(key.data())) {
        const double* z = cl->centre.data();
        double K = c[H];
        double shear = 0.0;
        for (int j = 0; j < n_; ++j) {
          K += 0.5 * (c[j] * z[n_ + j] - z[j] * c[n_ + j]);
          shear += 0.5 * (cl->half[j] * std::abs(z[n_ + j] - c[n_ + j]) + cl->half[n_ + j] * std::abs(z[j] - c[j]));
        }
        const double w = r2 + shear * (1.0 + 1e-12) + 1e-15 * (std::abs(K) + 1.0);
        const auto b = lv_.begin() + static_cast<long>(cl->begin);
        const auto e = lv_.begin() + static_cast<long>(cl->end);
        auto s = std::lower_bound(b, e, K - w);
        for (auto it = s; it != e && *it <= K + w; ++it) {
          const std::size_t slot = static_cast<std::size_t>(it - lv_.begin());
          if (within(pts_.data() + slot * D, c, r2)) fn(order_[slot]);
        }
      }
      int a = H - 1;
      while (a >= 0) {
        if (++key[a] <= hi[a]) break;
        key[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
  }

 private:
  struct Cell {
    std::vector<double> centre;
    std::vector<double> half;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  void key_of(const double* p, std::int64_t* key) const {
    for (int a = 0; a < 2 * n_; ++a) key[a] = static_cast<std::int64_t>(std::floor((p[a] - origin_[a]) / cell_));
  }

  std::uint64_t hash(const std::int64_t* key) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (int a = 0; a < 2 * n_; ++a) {
      h ^= static_cast<std::uint64_t>(key[a]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return h;
  }

  const Cell* find(const std::int64_t* key) const {
    auto it = lookup_.find(hash(key));
    if (it == lookup_.end()) return nullptr;
    const int H = 2 * n_;
    for (std::uint32_t c : it->second)
      if (std::equal(key, key + H, keys_.begin() + static_cast<long>(c) * H)) return &cells_[c];
    return nullptr;
  }

  // d_inf(p, c) <= r, compared in squares.
  bool within(const double* p, const double* c, double r2) const {
    double h = 0.0, t = p[2 * n_] - c[2 * n_];
    for (int j = 0; j < n_; ++j) {
      const double dx = p[j] - c[j], dy = p[n_ + j] - c[n_ + j];
      h += dx * dx + dy * dy;
      t += 0.5 * (p[j] * c[n_ + j] - c[j] * p[n_ + j]);
    }
    return h <= r2 && std::abs(t) <= r2;
  }

  double local_t(const double* p, const double* z) const {
    double t = p[2 * n_];
    for (int j = 0; j < n_; ++j) t += 0.5 * (p[j] * z[n_ + j] - z[j] * p[n_ + j]);
    return t;
  }

  const PointCloud& pc_;
  int n_;
  double cell_;
  std::vector<double> origin_;
  std::vector<Cell> cells_;
  std::vector<std::int64_t> keys_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> lookup_;
  std::vector<std::uint32_t> order_;
  std::vector<double> lv_;
  std::vector<double> pts_;
};

inline bool lex_less(const double* a, const double* b, std::size_t D) {
  return std::lexicographical_compare(a, a + D, b, b + D);
}

// Greedy maximum-coverage ball cover with lazy count updates. Returns the
// chosen centre index per ball and the ball each point was assigned to.
inline std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> greedy_balls(
    const PointCloud& pc, const BallIndex& index, double r) {
  const std::size_t N = pc.size();
  const std::size_t D = pc.dim();
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> owner(N, kNone);

  std::vector<std::uint32_t> count(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    std::uint32_t c = 0;
    index.query(pc.point(i), r, [&](std::uint32_t) { ++c; });
    count[i] = c;
  }
  auto worse = [&](const std::pair<std::uint32_t, std::uint32_t>& x,
                   const std::pair<std::uint32_t, std::uint32_t>& y) {
    if (x.first != y.first) return x.first < y.first;
    return lex_less(pc.point(y.second), pc.point(x.second), D);
  };
  std::vector<std::pair<std::uint32_t, std::uint32_t>> heap;
  heap.reserve(N);
  for (std::size_t i = 0; i < N; ++i) heap.emplace_back(count[i], static_cast<std::uint32_t>(i));
  std::make_heap(heap.begin(), heap.end(), worse);

  std::vector<std::uint32_t> centres;
  std::vector<std::uint32_t> fresh;
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    auto top = heap.back();
    heap.pop_back();
    if (owner[top.second] != kNone) continue;
    if (top.first != count[top.second]) {
      top.first = count[top.second];
      heap.push_back(top);
      std::push_heap(heap.begin(), heap.end(), worse);
      continue;
    }
    const auto id = static_cast<std::uint32_t>(centres.size());
    centres.push_back(top.second);
    fresh.clear();
    index.query(pc.point(top.second), r, [&](std::uint32_t p) {
      if (owner[p] == kNone) {
        owner[p] = id;
        fresh.push_back(p);
      }
    });
    // Balls are symmetric, so the candidates that lose p are those within r of p.
    for (auto p : fresh) index.query(pc.point(p), r, [&](std::uint32_t q) { --count[q]; });
  }
  return {std::move(centres), std::move(owner)};
}

}  // namespace detail

struct CoveringOptions {
  /// Floor on shrunk radii, as a fraction of delta.
  double radius_floor = 1e-3;
  /// Keep the cover elements in the result.
  bool keep_cover = true;
  /// Vertical-to-horizontal shape ratios b / a^2 tried by the box tiling.
  std::vector<double> box_ratios = {0.5, 1.0, 1.5, 2.0};
  /// Scales tried per shape, a = a_max * 2^{-i/4}.
  int box_scales = 4;
};

namespace detail {

// Spherical and centred estimates from one greedy cover: the centred one
// keeps the sample-point centres, the spherical one may move each centre to
// the centroid of its assigned points when that shrinks the radius.
inline std::pair<CoveringEstimate, CoveringEstimate> ball_estimates(const SetSampler& set, double m,
                                                                    double delta, const CoveringOptions& opts) {
  CoveringEstimate sph, cen;
  sph.family = {MeasureKind::Spherical, m};
  cen.family = {MeasureKind::Centered, m};
  sph.delta = cen.delta = delta;
  sph.strategy = "greedy-balls+recentre";
  cen.strategy = "greedy-centred-balls";
  const double r = 0.5 * delta;
  const PointCloud pc = set.sample(r);
  sph.samples = cen.samples = pc.size();
  if (pc.size() == 0) {
    if (set.known_empty()) return {sph, cen};
    throw EmptySample("premeasure_estimate: sampler produced no points");
  }
  const std::size_t D = pc.dim();
  const BallIndex index(pc, 0.5 * r);
  auto [centres, owner] = greedy_balls(pc, index, r);

  std::vector<std::vector<std::uint32_t>> members(centres.size());
  for (std::size_t i = 0; i < owner.size(); ++i) members[owner[i]].push_back(static_cast<std::uint32_t>(i));
  const double floor_r = opts.radius_floor * delta;
  const double beta = beta_const(m);
  auto add = [&](CoveringEstimate& e, std::vector<double> c, double rad) {
    rad = std::min(r, std::max(rad, floor_r));
    e.value += beta * std::pow(2.0 * rad, m);
    if (opts.keep_cover) e.cover.push_back(CoverElement{std::move(c), rad, {}, 2.0 * rad});
  };
  for (std::size_t b = 0; b < centres.size(); ++b) {
    std::vector<double> c(pc.point(centres[b]), pc.point(centres[b]) + D);
    double rad = 0.0;
    for (auto p : members[b]) rad = std::max(rad, detail::dist_inf_raw(pc.point(p), c.data(), pc.n));
    std::vector<double> g(D, 0.0);
    for (auto p : members[b])
      for (std::size_t a = 0; a < D; ++a) g[a] += pc.point(p)[a];
    for (double& x : g) x /= static_cast<double>(members[b].size());
    double rg = 0.0;
    for (auto p : members[b]) rg = std::max(rg, detail::dist_inf_raw(pc.point(p), g.data(), pc.n));
    if (rg < rad)
      add(sph, std::move(g), rg);
    else
      add(sph, c, rad);
    add(cen, std::move(c), rad);
  }
  sph.cover_size = cen.cover_size = centres.size();
  return {std::move(sph), std::move(cen)};
}

// Tiling by left translates of c . ([0,a]^h x [0,b]) with flat axes where the
// sample has no extent. Each horizontal column is tiled from its lowest point.
inline std::pair<std::size_t, double> tile_count(const PointCloud& pc, const std::vector<double>& lo,
                                                 const std::vector<bool>& flat, double a, double b) {
  const int n = pc.n;
  const int H = 2 * n;
  // (64-bit column hash, local vertical) per point, grouped by sorting.
  std::vector<std::pair<std::uint64_t, double>> cols(pc.size());
  std::array<double, 16> c{};
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const double* p = pc.point(i);
    std::uint64_t h = 1469598103934665603ULL;
    for (int ax = 0; ax < H; ++ax) {
      std::int64_t q = 0;
      if (!flat[ax]) q = std::max<std::int64_t>(static_cast<std::int64_t>(std::floor((p[ax] - lo[ax]) / a * (1.0 - 1e-12))), 0);
      c[ax] = flat[ax] ? lo[ax] : lo[ax] + a * static_cast<double>(q);
      h = (h ^ static_cast<std::uint64_t>(q)) * 1099511628211ULL;
    }
    double t = p[H];
    for (int j = 0; j < n; ++j) t += 0.5 * (p[j] * c[n + j] - c[j] * p[n + j]);
    cols[i] = {h, t};
  }
  std::sort(cols.begin(), cols.end());
  std::size_t tiles = 0;
  for (std::size_t i = 0; i < cols.size();) {
    std::size_t e = i;
    while (e < cols.size() && cols[e].first == cols[i].first) ++e;
    const double base = cols[i].second;
    std::int64_t last = -1;
    for (std::size_t q = i; q < e; ++q) {
      const auto bin = static_cast<std::int64_t>(std::floor((cols[q].second - base) / b * (1.0 - 1e-12)));
      if (bin != last) {
        ++tiles;
        last = bin;
      }
    }
    i = e;
  }
  double ab = 0.0, a2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double aj = flat[j] ? 0.0 : a, ajn = flat[n + j] ? 0.0 : a;
    ab += aj * ajn;
    a2 += aj * aj + ajn * ajn;
  }
  const double diam = std::max(std::sqrt(a2), std::sqrt(b + 0.5 * ab));
  return {tiles, diam};
}

inline CoveringEstimate box_estimate(const SetSampler& set, MeasureFamily fam, double delta,
                                     const CoveringOptions& opts) {
  CoveringEstimate est;
  est.family = fam;
  est.delta = delta;
  est.strategy = "box-tiling";
  const PointCloud pc = set.sample(0.5 * delta);
  est.samples = pc.size();
  if (pc.size() == 0) {
    if (set.known_empty()) return est;
    throw EmptySample("premeasure_estimate: sampler produced no points");
  }
  const int n = pc.n;
  const int H = 2 * n;
  if (H > 16) throw DimensionError("box tiling: n must be <= 8");
  std::vector<double> lo(static_cast<std::size_t>(H), std::numeric_limits<double>::infinity()),
      hi(static_cast<std::size_t>(H), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pc.size(); ++i)
    for (int a = 0; a < H; ++a) {
      lo[a] = std::min(lo[a], pc.point(i)[a]);
      hi[a] = std::max(hi[a], pc.point(i)[a]);
    }
  std::vector<bool> flat(static_cast<std::size_t>(H));
  int nonflat = 0, pairs = 0;
  double extent = 0.0;
  for (int a = 0; a < H; ++a) {
    flat[a] = hi[a] - lo[a] <= 1e-14 * (1.0 + std::abs(hi[a]));
    if (!flat[a]) {
      ++nonflat;
      extent = std::max(extent, hi[a] - lo[a]);
    }
  }
  for (int j = 0; j < n; ++j) pairs += !flat[j] && !flat[n + j];

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_tiles = 0;
  double best_a = 0.0, best_b = 0.0, best_diam = 0.0;
  auto consider = [&](double a, double b) {
    if (!(b > 0.0)) return;
    const auto [tiles, diam] = tile_count(pc, lo, flat, a, b);
    if (diam > delta * (1.0 + 1e-12)) return;
    const double v = static_cast<double>(tiles) * fam.beta() * std::pow(diam, fam.m);
    if (v < best) {
      best = v;
      best_tiles = tiles;
      best_a = a;
      best_b = b;
      best_diam = diam;
    }
  };
  if (nonflat == 0) {
    // Purely vertical sample: tiles are vertical segments of height b.
    double tspan = 0.0;
    {
      std::vector<double> c(lo);
      double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
      for (std::size_t i = 0; i < pc.size(); ++i) {
        tmin = std::min(tmin, pc.point(i)[H]);
        tmax = std::max(tmax, pc.point(i)[H]);
      }
      tspan = tmax - tmin;
    }
    const double bmax = delta * delta;
    for (int s = 0; s < opts.box_scales; ++s) consider(1.0, bmax * std::pow(2.0, -0.5 * s));
    if (tspan > 0.0)
      for (int extra = 0; extra < 4; ++extra) {
        const double cnt = std::ceil(tspan / bmax - 1e-9) + extra;
        consider(1.0, tspan / cnt);
      }
  } else {
    for (double theta : opts.box_ratios) {
      const double amax = delta / std::sqrt(std::max(static_cast<double>(nonflat), theta + 0.5 * pairs));
      std::vector<double> scales;
      for (int s = 0; s < opts.box_scales; ++s) scales.push_back(amax * std::pow(2.0, -0.25 * s));
      for (int extra = 0; extra < 2; ++extra) scales.push_back(extent / (std::ceil(extent / amax - 1e-9) + extra));
      for (double a : scales) consider(a, theta * a * a);
    }
  }
  if (!std::isfinite(best)) throw NumericalError("box tiling found no admissible shape");
  est.value = best;
  est.cover_size = best_tiles;
  if (opts.keep_cover) {
    std::vector<double> sides(static_cast<std::size_t>(H) + 1);
    for (int a = 0; a < H; ++a) sides[a] = flat[a] ? 0.0 : best_a;
    sides[H] = best_b;
    est.cover.push_back(CoverElement{lo, 0.0, sides, best_diam});
  }
  return est;
}

}  // namespace detail

/// Upper-bound estimate of the delta-premeasure of the sampled set: box
/// tiling for Hausdorff, greedy ball covers for spherical (free centres) and
/// centred (centres on sample points).
inline CoveringEstimate premeasure_estimate(const SetSampler& set, MeasureFamily fam, double delta,
                                            const CoveringOptions& opts = {}) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("premeasure_estimate: delta must be positive");
  if (!(fam.m >= 0.0)) throw DomainError("premeasure_estimate: m must be >= 0");
  if (fam.kind == MeasureKind::Hausdorff) return detail::box_estimate(set, fam, delta, opts);
  auto [sph, cen] = detail::ball_estimates(set, fam.m, delta, opts);
  return fam.kind == MeasureKind::Spherical ? sph : cen;
}

struct PremeasureTriple {
  CoveringEstimate hausdorff, spherical, centered;
};

/// All three estimates at one delta, sharing the greedy ball cover.
inline PremeasureTriple premeasure_all(const SetSampler& set, double m, double delta,
                                       const CoveringOptions& opts = {}) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("premeasure_estimate: delta must be positive");
  if (!(m >= 0.0)) throw DomainError("premeasure_estimate: m must be >= 0");
  auto [sph, cen] = detail::ball_estimates(set, m, delta, opts);
  return {detail::box_estimate(set, {MeasureKind::Hausdorff, m}, delta, opts), std::move(sph), std::move(cen)};
}

/// Diameter of c . ([0,a_1] x .. x [0,a_2n] x [0,b]).
inline double box_diameter(std::span<const double> a, double b) {
  if (a.size() % 2 != 0) throw DimensionError("box_diameter: need 2n horizontal sides");
  const std::size_t n = a.size() / 2;
  double a2 = 0.0, ab = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    a2 += a[j] * a[j] + a[n + j] * a[n + j];
    ab += a[j] * a[n + j];
  }
  return std::max(std::sqrt(a2), std::sqrt(b + 0.5 * ab));
}

// ---------------------------------------------------------------------------
// Area formula

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

/// sum_{l=1..k} C(2n-k, l) C(k, l)
inline std::uint64_t minor_count(int n, int k) {
  std::uint64_t s = 0;
  for (int l = 1; l <= k; ++l) s += binomial(2 * n - k, l) * binomial(k, l);
  return s;
}

namespace detail {

inline void combinations(int n, int l, std::vector<std::vector<int>>& out) {
  std::vector<int> c(static_cast<std::size_t>(l));
  std::iota(c.begin(), c.end(), 0);
  if (l > n) return;
  for (;;) {
    out.push_back(c);
    int i = l - 1;
    while (i >= 0 && c[i] == n - l + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < l; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace detail

/// sqrt(1 + sum of squares of all l x l minors of J, l = 1..rows). If
/// `minors` is given it receives the number of minors evaluated.
inline double area_integrand(const IntrinsicJacobian& J, std::uint64_t* minors = nullptr) {
  const int k = static_cast<int>(J.rows());
  const int c = static_cast<int>(J.cols());
  double s = 1.0;
  std::uint64_t count = 0;
  for (int l = 1; l <= std::min(k, c); ++l) {
    std::vector<std::vector<int>> rows, cols;
    detail::combinations(k, l, rows);
    detail::combinations(c, l, cols);
    Eigen::MatrixXd M(l, l);
    for (const auto& r : rows)
      for (const auto& q : cols) {
        for (int i = 0; i < l; ++i)
          for (int j = 0; j < l; ++j) M(i, j) = J(r[i], q[j]);
        const double det = l == 1 ? M(0, 0) : M.partialPivLu().determinant();
        s += det * det;
        ++count;
      }
  }
  if (minors) *minors = count;
  return std::sqrt(s);
}

enum class JacobianMethod { Curve, Analytic, LevelSet };

inline const char* to_string(JacobianMethod m) {
  switch (m) {
    case JacobianMethod::Curve: return "curve";
    case JacobianMethod::Analytic: return "analytic";
    case JacobianMethod::LevelSet: return "levelset";
  }
  return "";
}

struct AreaOptions {
  /// Simpson nodes per axis (odd); used when the base dimension is <= 3.
  int simpson_nodes = 33;
  std::size_t qmc_points = std::size_t{1} << 16;
  std::uint64_t qmc_seed = 0xC0FFEE;
  /// Force quasi-Monte Carlo regardless of dimension.
  bool force_qmc = false;
  JacobianMethod method = JacobianMethod::Curve;
  PartialOptions partial;
  /// Points of H^n to keep; unset keeps everything.
  std::function<bool(const GroupPoint&)> region;
  /// Required for JacobianMethod::LevelSet.
  std::optional<LevelSetFunction> levelset;
};

struct AreaResult {
  double value = 0.0;
  std::string rule;
  std::vector<int> nodes_per_axis;
  std::size_t points = 0;
  double integrand_min = 0.0;
  double integrand_max = 0.0;
  /// Quadrature of the region indicator with the same rule.
  double region_volume = 0.0;
  std::string jacobian;
  /// Curve-method nodes where no W-curve fits inside the domain (corners);
  /// these use the dual-number Jacobian instead.
  std::size_t fallback_nodes = 0;
};

/// Integral over Omega (intersected with Phi^{-1}(region)) of the area
/// integrand of J^phi phi.
inline AreaResult graph_area(const GraphFunction& phi, const Box& omega, const AreaOptions& opts = {}) {
  const Splitting& s = phi.splitting();
  if (omega.dim() != s.base_dim()) throw DimensionError("graph_area: box has the wrong dimension");
  if (!phi.domain().contains_box(omega)) throw DomainError("graph_area: box must lie inside the domain");
  if (opts.method == JacobianMethod::LevelSet && !opts.levelset)
    throw DomainError("graph_area: levelset method needs a level-set function");
  const std::size_t d = omega.dim();

  std::vector<std::vector<double>> pts;
  std::vector<double> wts;
  AreaResult res;
  res.jacobian = to_string(opts.method);
  if (d <= 3 && !opts.force_qmc) {
    int N = opts.simpson_nodes;
    if (N < 3 || N % 2 == 0) throw DomainError("graph_area: Simpson node count must be odd and >= 3");
    res.rule = "simpson";
    res.nodes_per_axis.assign(d, N);
    std::vector<double> w1(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) w1[i] = (i == 0 || i == N - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    std::vector<int> counts(d, N);
    std::vector<int> idx(d, 0);
    detail::for_each_grid_point(omega.lo(), omega.hi(), counts, [&](const std::vector<double>& x) {
      double w = 1.0;
      for (std::size_t a = 0; a < d; ++a) w *= w1[idx[a]] * omega.side(a) / (3.0 * (N - 1));
      pts.push_back(x);
      wts.push_back(w);
      std::size_t a = d;
      while (a-- > 0) {
        if (++idx[a] < N) break;
        idx[a] = 0;
      }
    });
  } else {
    res.rule = "qmc";
    Halton seq(d, opts.qmc_seed);
    const double w = omega.volume() / static_cast<double>(opts.qmc_points);
    for (std::size_t i = 0; i < opts.qmc_points; ++i) {
      pts.push_back(omega.at(seq.point(i)));
      wts.push_back(w);
    }
  }
  res.points = pts.size();

  struct NodeVal {
    double g = 0.0;
    bool in = false;
    bool fallback = false;
  };
  bool all_dual = true;
  for (const auto& c : phi.components()) all_dual = all_dual && c.has_dual();
  const auto vals = parallel_map<NodeVal>(pts.size(), [&](std::size_t i) {
    const auto& m = pts[i];
    const auto h = phi.eval(m);
    std::vector<double> p(2 * static_cast<std::size_t>(s.n()) + 1);
    detail::graph_point_raw(s, m.data(), h.data(), p.data());
    const GroupPoint gp(p);
    if (opts.region && !opts.region(gp)) return NodeVal{0.0, false};
    IntrinsicJacobian J;
    bool fallback = false;
    switch (opts.method) {
      case JacobianMethod::Curve:
        try {
          J = intrinsic_jacobian_detail(phi, m, opts.partial).J;
        } catch (const CurveExit&) {
          if (!all_dual) throw;
          J = analytic_jacobian(phi, m);
          fallback = true;
        }
        break;
      case JacobianMethod::Analytic: J = analytic_jacobian(phi, m); break;
      case JacobianMethod::LevelSet: J = jacobian_from_levelset(*opts.levelset, gp).J; break;
    }
    return NodeVal{area_integrand(J), true, fallback};
  });
  res.integrand_min = std::numeric_limits<double>::infinity();
  res.integrand_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!vals[i].in) continue;
    res.fallback_nodes += vals[i].fallback;
    res.value += wts[i] * vals[i].g;
    res.region_volume += wts[i];
    res.integrand_min = std::min(res.integrand_min, vals[i].g);
    res.integrand_max = std::max(res.integrand_max, vals[i].g);
  }
  if (!std::isfinite(res.integrand_min)) res.integrand_min = res.integrand_max = 0.0;
  return res;
}

}  // namespace hcalc
