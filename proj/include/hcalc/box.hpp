#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/error.hpp"

namespace hcalc {

/// Axis-aligned box [lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}].
class Box {
 public:
  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size())
      throw DimensionError("Box: lo and hi have different lengths");
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]))
        throw DomainError("Box: non-finite bound");
      if (!(lo_[i] < hi_[i]))
        throw DomainError("Box: degenerate axis " + std::to_string(i) + " (lo >= hi)");
    }
  }

  static Box unit(std::size_t dim) {
    return Box(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
  }

  std::size_t dim() const noexcept { return lo_.size(); }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }
  double lo(std::size_t i) const { return lo_[i]; }
  double hi(std::size_t i) const { return hi_[i]; }
  double side(std::size_t i) const { return hi_[i] - lo_[i]; }

  double min_side() const {
    double m = side(0);
    for (std::size_t i = 1; i < dim(); ++i) m = std::min(m, side(i));
    return m;
  }

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= side(i);
    return v;
  }

  std::vector<double> center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
  }

  bool contains(std::span<const double> p, double tol = 0.0) const {
    if (p.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (!(p[i] >= lo_[i] - tol && p[i] <= hi_[i] + tol)) return false;
    return true;
  }

  /// Box shrunk by `margin` on every side.
  Box shrink(double margin) const {
    std::vector<double> lo(lo_), hi(hi_);
    for (std::size_t i = 0; i < dim(); ++i) {
      lo[i] += margin;
      hi[i] -= margin;
      if (!(lo[i] < hi[i]))
        throw DomainError("Box::shrink: margin " + std::to_string(margin) +
                          " leaves an empty box");
    }
    return Box(std::move(lo), std::move(hi));
  }

  /// Point at fractional position u in [0,1]^d.
  std::vector<double> at(std::span<const double> u) const {
    std::vector<double> p(dim());
    for (std::size_t i = 0; i < dim(); ++i) p[i] = lo_[i] + u[i] * side(i);
    return p;
  }

  bool contains_box(const Box& b) const {
    return b.dim() == dim() && contains(b.lo_) && contains(b.hi_);
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

}  // namespace hcalc
