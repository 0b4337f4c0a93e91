#pragma once

// Real-valued fields on R^d: expression-backed, grid-backed, or arbitrary
// callables. Derivatives use dual numbers where the backing supports them
// and Richardson-extrapolated differences otherwise.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/dual.hpp"
#include "hcalc/error.hpp"
#include "hcalc/expr.hpp"

namespace hcalc {

enum class Smoothness { Smooth, ContinuousOnly };

class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual std::size_t arity() const = 0;
  virtual double eval(std::span<const double> x) const = 0;
  virtual bool has_dual() const { return false; }
  virtual Dual eval_dual(std::span<const Dual>) const {
    throw Error("field has no dual-number evaluation");
  }
  virtual const Box* domain() const { return nullptr; }
  virtual Smoothness smoothness() const { return Smoothness::Smooth; }
  virtual const Expr* expr() const { return nullptr; }
};

class ExprFieldImpl final : public FieldImpl {
 public:
  ExprFieldImpl(Expr e, Smoothness s) : e_(std::move(e)), s_(s) {}
  std::size_t arity() const override { return e_.arity(); }
  double eval(std::span<const double> x) const override {
    const double v = e_(x);
    if (!std::isfinite(v)) throw DomainError("expression evaluated to a non-finite value");
    return v;
  }
  bool has_dual() const override { return true; }
  Dual eval_dual(std::span<const Dual> x) const override { return e_.eval<Dual>(x); }
  Smoothness smoothness() const override { return s_; }
  const Expr* expr() const override { return &e_; }

 private:
  Expr e_;
  Smoothness s_;
};

/// Samples on a uniform tensor grid over a box, interpolated multilinearly.
/// Node values are stored with the first axis varying slowest.
class GridFieldImpl final : public FieldImpl {
 public:
  GridFieldImpl(Box box, std::vector<int> nodes, std::vector<double> values)
      : box_(std::move(box)), nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() != box_.dim()) throw DimensionError("grid: one node count per axis required");
    std::size_t total = 1;
    for (int n : nodes_) {
      if (n < 2) throw DomainError("grid: at least 2 nodes per axis required");
      total *= static_cast<std::size_t>(n);
    }
    if (values_.size() != total)
      throw DimensionError("grid: expected " + std::to_string(total) + " values, got " +
                           std::to_string(values_.size()));
    stride_.assign(nodes_.size(), 1);
    for (std::size_t i = nodes_.size(); i-- > 1;)
      stride_[i - 1] = stride_[i] * static_cast<std::size_t>(nodes_[i]);
  }

  std::size_t arity() const override { return box_.dim(); }
  const Box* domain() const override { return &box_; }
  Smoothness smoothness() const override { return Smoothness::ContinuousOnly; }

  double eval(std::span<const double> x) const override {
    const std::size_t d = box_.dim();
    if (x.size() != d) throw DimensionError("grid: wrong number of arguments");
    if (!box_.contains(x, 1e-12 * (1.0 + box_.min_side())))
      throw DomainError("grid field evaluated outside its box");
    std::size_t base = 0;
    double frac[16];
    std::size_t cell_stride[16];
    if (d > 16) throw DimensionError("grid: at most 16 axes supported");
    for (std::size_t i = 0; i < d; ++i) {
      const double h = box_.side(i) / (nodes_[i] - 1);
      double u = (x[i] - box_.lo(i)) / h;
      u = std::clamp(u, 0.0, static_cast<double>(nodes_[i] - 1));
      int c = static_cast<int>(std::floor(u));
      if (c >= nodes_[i] - 1) c = nodes_[i] - 2;
      frac[i] = u - c;
      base += static_cast<std::size_t>(c) * stride_[i];
      cell_stride[i] = stride_[i];
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double w = 1.0;
      std::size_t idx = base;
      for (std::size_t i = 0; i < d; ++i) {
        if (corner >> i & 1u) {
          w *= frac[i];
          idx += cell_stride[i];
        } else {
          w *= 1.0 - frac[i];
        }
      }
      if (w != 0.0) acc += w * values_[idx];
    }
    return acc;
  }

  const std::vector<int>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  Box box_;
  std::vector<int> nodes_;
  std::vector<double> values_;
  std::vector<std::size_t> stride_;
};

class FunctionFieldImpl final : public FieldImpl {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  using DualFn = std::function<Dual(std::span<const Dual>)>;

  FunctionFieldImpl(std::size_t arity, Fn fn, std::optional<Box> domain, Smoothness s,
                    DualFn dual = {})
      : arity_(arity), fn_(std::move(fn)), dual_(std::move(dual)), domain_(std::move(domain)), s_(s) {}

  std::size_t arity() const override { return arity_; }
  double eval(std::span<const double> x) const override {
    if (x.size() != arity_) throw DimensionError("field: wrong number of arguments");
    return fn_(x);
  }
  bool has_dual() const override { return static_cast<bool>(dual_); }
  Dual eval_dual(std::span<const Dual> x) const override {
    if (!dual_) return FieldImpl::eval_dual(x);
    return dual_(x);
  }
  const Box* domain() const override { return domain_ ? &*domain_ : nullptr; }
  Smoothness smoothness() const override { return s_; }

 private:
  std::size_t arity_;
  Fn fn_;
  DualFn dual_;
  std::optional<Box> domain_;
  Smoothness s_;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const FieldImpl> impl) : impl_(std::move(impl)) {}

  static ScalarField from_expr(Expr e, Smoothness s = Smoothness::Smooth) {
    return ScalarField(std::make_shared<ExprFieldImpl>(std::move(e), s));
  }
  static ScalarField parse(std::string_view text, const std::vector<std::string>& vars,
                           Smoothness s = Smoothness::Smooth) {
    return from_expr(parse_expr(text, vars), s);
  }
  static ScalarField constant(double c, std::size_t arity) {
    std::vector<std::string> vars;
    for (std::size_t i = 0; i < arity; ++i) vars.push_back("_" + std::to_string(i));
    return from_expr(Expr::constant(c, std::move(vars)));
  }
  static ScalarField from_grid(Box box, std::vector<int> nodes, std::vector<double> values) {
    return ScalarField(
        std::make_shared<GridFieldImpl>(std::move(box), std::move(nodes), std::move(values)));
  }
  static ScalarField from_function(std::size_t arity, FunctionFieldImpl::Fn fn,
                                   std::optional<Box> domain = std::nullopt,
                                   Smoothness s = Smoothness::Smooth,
                                   FunctionFieldImpl::DualFn dual = {}) {
    return ScalarField(std::make_shared<FunctionFieldImpl>(arity, std::move(fn), std::move(domain),
                                                           s, std::move(dual)));
  }

  /// Samples `f` on a uniform grid over `box`.
  static ScalarField sample_grid(const ScalarField& f, const Box& box, std::vector<int> nodes) {
    const std::size_t d = box.dim();
    std::size_t total = 1;
    for (int n : nodes) total *= static_cast<std::size_t>(n);
    std::vector<double> values(total);
    std::vector<double> x(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (std::size_t i = d; i-- > 0;) {
        const auto n = static_cast<std::size_t>(nodes[i]);
        x[i] = box.lo(i) + box.side(i) * static_cast<double>(rem % n) / static_cast<double>(n - 1);
        rem /= n;
      }
      values[idx] = f(x);
    }
    return from_grid(box, std::move(nodes), std::move(values));
  }

  bool valid() const noexcept { return static_cast<bool>(impl_); }
  std::size_t arity() const { return impl_->arity(); }
  const Box* domain() const { return impl_->domain(); }
  Smoothness smoothness() const { return impl_->smoothness(); }
  bool has_dual() const { return impl_->has_dual(); }
  const Expr* expr() const { return impl_->expr(); }
  const FieldImpl& impl() const { return *impl_; }

  double operator()(std::span<const double> x) const { return impl_->eval(x); }
  double eval(std::span<const double> x) const { return impl_->eval(x); }
  Dual eval_dual(std::span<const Dual> x) const { return impl_->eval_dual(x); }

  /// Derivative of the field at x along `dir`. Finite differences use step h
  /// and switch to a one-sided stencil when x +/- h leaves the declared box.
  double directional(std::span<const double> x, std::span<const double> dir,
                     double h = 1e-4) const {
    const std::size_t d = arity();
    if (x.size() != d || dir.size() != d) throw DimensionError("directional: wrong lengths");
    if (has_dual()) {
      thread_local std::vector<Dual> xd;
      xd.resize(d);
      for (std::size_t i = 0; i < d; ++i) xd[i] = Dual(x[i], dir[i]);
      return eval_dual(xd).d;
    }
    return finite_difference(x, dir, h);
  }

  double partial(std::size_t axis, std::span<const double> x, double h = 1e-4) const {
    std::vector<double> e(arity(), 0.0);
    if (axis >= e.size()) throw DomainError("partial: axis out of range");
    e[axis] = 1.0;
    return directional(x, e, h);
  }

  std::vector<double> gradient(std::span<const double> x, double h = 1e-4) const {
    std::vector<double> g(arity());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = partial(i, x, h);
    return g;
  }

  /// Central difference with one Richardson step, falling back to a one-sided
  /// second-order stencil near the boundary of the declared box.
  double finite_difference(std::span<const double> x, std::span<const double> dir,
                           double h) const {
    const std::size_t d = x.size();
    std::vector<double> y(d);
    auto at = [&](double s) {
      for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + s * dir[i];
      return eval(y);
    };
    auto inside = [&](double s) {
      const Box* b = domain();
      if (!b) return true;
      for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + s * dir[i];
      return b->contains(y);
    };
    if (inside(h) && inside(-h)) {
      auto central = [&](double s) { return (at(s) - at(-s)) / (2.0 * s); };
      return (4.0 * central(0.5 * h) - central(h)) / 3.0;
    }
    const double sgn = inside(2.0 * h) ? 1.0 : -1.0;
    if (!inside(sgn * 2.0 * h))
      throw DomainError("finite_difference: no room for a stencil inside the domain");
    const double f0 = at(0.0);
    auto one_sided = [&](double s) {
      return sgn * (-3.0 * f0 + 4.0 * at(sgn * s) - at(sgn * 2.0 * s)) / (2.0 * s);
    };
    return (4.0 * one_sided(0.5 * h) - one_sided(h)) / 3.0;
  }

 private:
  std::shared_ptr<const FieldImpl> impl_;
};

}  // namespace hcalc
