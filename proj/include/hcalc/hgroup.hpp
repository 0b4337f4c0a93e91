#pragma once

// Heisenberg group H^n in exponential coordinates (x_1..x_n, y_1..y_n, t).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/error.hpp"

namespace hcalc {

/// Number of (X_j, Y_j) pairs of H^n.
class HDim {
 public:
  explicit HDim(int n) : n_(n) {
    if (n < 1) throw DomainError("HDim: n must be >= 1, got " + std::to_string(n));
  }
  int n() const noexcept { return n_; }
  std::size_t coords() const noexcept { return static_cast<std::size_t>(2 * n_ + 1); }
  friend bool operator==(HDim a, HDim b) noexcept { return a.n_ == b.n_; }

 private:
  int n_;
};

class GroupPoint {
 public:
  GroupPoint() : c_(3, 0.0) {}

  explicit GroupPoint(std::vector<double> coords) : c_(std::move(coords)) {
    if (c_.size() < 3 || c_.size() % 2 == 0)
      throw DimensionError("GroupPoint: length must be 2n+1 with n >= 1, got " +
                           std::to_string(c_.size()));
    for (double v : c_)
      if (!std::isfinite(v)) throw DomainError("GroupPoint: non-finite coordinate");
  }

  static GroupPoint identity(HDim d) { return GroupPoint(std::vector<double>(d.coords(), 0.0)); }

  HDim dim() const { return HDim(n()); }
  int n() const noexcept { return static_cast<int>((c_.size() - 1) / 2); }
  std::size_t size() const noexcept { return c_.size(); }

  // 0-based pair index.
  double x(int j) const { return c_[static_cast<std::size_t>(j)]; }
  double y(int j) const { return c_[static_cast<std::size_t>(n() + j)]; }
  double t() const { return c_.back(); }

  double operator[](std::size_t i) const { return c_[i]; }
  std::span<const double> coords() const noexcept { return c_; }
  std::span<const double> horizontal() const noexcept { return {c_.data(), c_.size() - 1}; }

  friend bool operator==(const GroupPoint&, const GroupPoint&) = default;

 private:
  std::vector<double> c_;
};

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

// Raw kernels on contiguous coordinate arrays of length 2n+1, shared with the
// covering code where allocation per call is too expensive.
inline double symplectic_half(const double* p, const double* q, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += p[j] * q[j + n] - q[j] * p[j + n];
  return 0.5 * s;
}

inline double norm_inf_raw(const double* p, int n) {
  double h2 = 0.0;
  for (int i = 0; i < 2 * n; ++i) h2 += p[i] * p[i];
  return std::max(std::sqrt(h2), std::sqrt(std::abs(p[2 * n])));
}

// d_inf(p, q) = || q^{-1} p ||_inf without materializing the product.
inline double dist_inf_raw(const double* p, const double* q, int n) {
  double h2 = 0.0;
  double cross = 0.0;
  for (int j = 0; j < n; ++j) {
    const double dx = p[j] - q[j];
    const double dy = p[j + n] - q[j + n];
    h2 += dx * dx + dy * dy;
    // (-q) . p vertical cross term
    cross += -q[j] * p[j + n] + p[j] * q[j + n];
  }
  const double vert = p[2 * n] - q[2 * n] + 0.5 * cross;
  return std::max(std::sqrt(h2), std::sqrt(std::abs(vert)));
}

}  // namespace detail

/// Group law: horizontal coordinates add, the vertical one picks up the
/// symplectic correction 1/2 sum_j (p_j q_{j+n} - q_j p_{j+n}).
inline GroupPoint product(const GroupPoint& p, const GroupPoint& q) {
  detail::require_same_dim(p.size(), q.size(), "product");
  const int n = p.n();
  std::vector<double> r(p.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = p[i] + q[i];
  r.back() += detail::symplectic_half(p.coords().data(), q.coords().data(), n);
  return GroupPoint(std::move(r));
}

inline GroupPoint operator*(const GroupPoint& p, const GroupPoint& q) { return product(p, q); }

inline GroupPoint inverse(const GroupPoint& p) {
  std::vector<double> r(p.coords().begin(), p.coords().end());
  for (double& v : r) v = -v;
  return GroupPoint(std::move(r));
}

inline GroupPoint dilate(double lambda, const GroupPoint& p) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("dilate: lambda must be a positive finite number");
  std::vector<double> r(p.coords().begin(), p.coords().end());
  for (std::size_t i = 0; i + 1 < r.size(); ++i) r[i] *= lambda;
  r.back() *= lambda * lambda;
  return GroupPoint(std::move(r));
}

/// max{ |horizontal|, |t|^{1/2} }
inline double norm_inf(const GroupPoint& p) { return detail::norm_inf_raw(p.coords().data(), p.n()); }

inline double dist_inf(const GroupPoint& p, const GroupPoint& q) {
  detail::require_same_dim(p.size(), q.size(), "dist_inf");
  return norm_inf(product(inverse(q), p));
}

enum class FrameKind { X, Y, T };

/// One element of the left-invariant frame. `j` is the 0-based pair index and
/// is ignored for T.
struct FrameField {
  FrameKind kind;
  int j = 0;
};

/// Coefficients, in the coordinate basis, of a left-invariant frame field at p:
///   X_j = d/dx_j - y_j/2 d/dt,  Y_j = d/dy_j + x_j/2 d/dt,  T = d/dt.
inline std::vector<double> frame_eval(FrameField f, const GroupPoint& p) {
  const int n = p.n();
  std::vector<double> c(p.size(), 0.0);
  switch (f.kind) {
    case FrameKind::T:
      c.back() = 1.0;
      return c;
    case FrameKind::X:
    case FrameKind::Y:
      break;
  }
  if (f.j < 0 || f.j >= n)
    throw DomainError("frame_eval: index " + std::to_string(f.j) + " out of range for n=" +
                      std::to_string(n));
  if (f.kind == FrameKind::X) {
    c[static_cast<std::size_t>(f.j)] = 1.0;
    c.back() = -0.5 * p.y(f.j);
  } else {
    c[static_cast<std::size_t>(n + f.j)] = 1.0;
    c.back() = 0.5 * p.x(f.j);
  }
  return c;
}

/// The 2n horizontal frame fields in the order X_1..X_n, Y_1..Y_n.
inline std::vector<FrameField> horizontal_frame(HDim d) {
  std::vector<FrameField> out;
  for (int j = 0; j < d.n(); ++j) out.push_back({FrameKind::X, j});
  for (int j = 0; j < d.n(); ++j) out.push_back({FrameKind::Y, j});
  return out;
}

}  // namespace hcalc
