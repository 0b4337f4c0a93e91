#pragma once

// Forward-mode dual numbers carrying one directional derivative.

#include <cmath>

#include "hcalc/error.hpp"

namespace hcalc {

struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}
};

inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline Dual sqrt(Dual a) {
  if (a.v < 0.0) throw DomainError("sqrt of a negative number");
  if (a.v == 0.0) {
    if (a.d != 0.0) throw NonsmoothPoint("derivative of sqrt requested at 0");
    return {0.0, 0.0};
  }
  const double s = std::sqrt(a.v);
  return {s, 0.5 * a.d / s};
}

inline Dual abs(Dual a) {
  if (a.v == 0.0) {
    if (a.d != 0.0) throw NonsmoothPoint("derivative of abs requested at 0");
    return {0.0, 0.0};
  }
  return a.v > 0.0 ? a : -a;
}

inline Dual sign(Dual a) {
  if (a.v == 0.0 && a.d != 0.0) throw NonsmoothPoint("derivative of sign requested at 0");
  return {a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0), 0.0};
}

inline double sign(double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); }

/// Integer power by repeated squaring; negative exponents invert.
template <class T>
T ipow(T base, int e) {
  if (e == 0) return T(1.0);
  const bool neg = e < 0;
  unsigned u = neg ? static_cast<unsigned>(-static_cast<long>(e)) : static_cast<unsigned>(e);
  T result(1.0);
  T b = base;
  while (u) {
    if (u & 1u) result = result * b;
    u >>= 1;
    if (u) b = b * b;
  }
  return neg ? T(1.0) / result : result;
}

}  // namespace hcalc
