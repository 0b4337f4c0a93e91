#pragma once

// Level-set maps f : U subset of H^n -> R^k and their horizontal Jacobians.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcalc/box.hpp"
#include "hcalc/error.hpp"
#include "hcalc/expr.hpp"
#include "hcalc/field.hpp"
#include "hcalc/hgroup.hpp"
#include "hcalc/split.hpp"

namespace hcalc {

using IntrinsicJacobian = Eigen::MatrixXd;

class LevelSetFunction {
 public:
  LevelSetFunction(Splitting s, std::vector<ScalarField> components,
                   std::optional<Box> box = std::nullopt, double det_threshold = 1e-10)
      : s_(s), comp_(std::move(components)), box_(std::move(box)), det_threshold_(det_threshold) {
    if (comp_.size() != static_cast<std::size_t>(s_.k()))
      throw DimensionError("LevelSetFunction: expected " + std::to_string(s_.k()) +
                           " components, got " + std::to_string(comp_.size()));
    const std::size_t dim = 2 * static_cast<std::size_t>(s_.n()) + 1;
    for (const auto& c : comp_)
      if (!c.valid() || c.arity() != dim)
        throw DimensionError("LevelSetFunction: component arity must be 2n+1");
    if (box_ && box_->dim() != dim) throw DimensionError("LevelSetFunction: box must have dimension 2n+1");
    if (!(det_threshold_ >= 0.0)) throw DomainError("LevelSetFunction: negative det threshold");
  }

  static LevelSetFunction parse(Splitting s, const std::vector<std::string>& texts,
                                std::optional<Box> box = std::nullopt,
                                double det_threshold = 1e-10) {
    std::vector<ScalarField> comps;
    const auto vars = s.group_vars();
    for (const auto& t : texts) comps.push_back(ScalarField::parse(t, vars));
    return LevelSetFunction(s, std::move(comps), std::move(box), det_threshold);
  }

  /// f_i(p) = x_i - phi_i(m(p)) where p = i(m(p)) . j(x_1..x_k). The graph of
  /// phi is the zero set of f and Xf is the identity.
  static LevelSetFunction lift(const GraphFunction& phi, double det_threshold = 1e-10);

  const Splitting& splitting() const noexcept { return s_; }
  const std::vector<ScalarField>& components() const noexcept { return comp_; }
  const std::optional<Box>& box() const noexcept { return box_; }
  double det_threshold() const noexcept { return det_threshold_; }
  std::size_t k() const noexcept { return comp_.size(); }

  void eval_into(std::span<const double> p, double* out) const {
    for (std::size_t i = 0; i < comp_.size(); ++i) out[i] = comp_[i](p);
  }

  std::vector<double> eval(std::span<const double> p) const {
    std::vector<double> out(comp_.size());
    eval_into(p, out.data());
    return out;
  }

  std::vector<double> eval(const GroupPoint& p) const { return eval(p.coords()); }

  /// k x 2n matrix [X_1 f .. X_n f, Y_1 f .. Y_n f].
  Eigen::MatrixXd horizontal_jacobian(const GroupPoint& p) const {
    if (p.n() != s_.n()) throw DimensionError("horizontal_jacobian: wrong group dimension");
    const int n = s_.n();
    Eigen::MatrixXd J(static_cast<Eigen::Index>(k()), 2 * n);
    const auto frame = horizontal_frame(HDim(n));
    for (int c = 0; c < 2 * n; ++c) {
      const auto dir = frame_eval(frame[static_cast<std::size_t>(c)], p);
      for (std::size_t i = 0; i < k(); ++i)
        J(static_cast<Eigen::Index>(i), c) = comp_[i].directional(p.coords(), dir);
    }
    return J;
  }

  /// Columns X_1..X_k.
  Eigen::MatrixXd Xf(const GroupPoint& p) const { return horizontal_jacobian(p).leftCols(s_.k()); }

  /// Columns X_{k+1}..X_n, Y_1..Y_n, matching the order of the W fields.
  Eigen::MatrixXd Yf(const GroupPoint& p) const {
    return horizontal_jacobian(p).rightCols(2 * s_.n() - s_.k());
  }

 private:
  Splitting s_;
  std::vector<ScalarField> comp_;
  std::optional<Box> box_;
  double det_threshold_;
};

namespace detail {

// m(p) written into `m` (length 2n+1-k) for a group point p.
template <class T>
void base_of(const Splitting& s, std::span<const T> p, T* m) {
  const int n = s.n(), k = s.k(), o = s.outer();
  T tau = p[static_cast<std::size_t>(2 * n)];
  for (int j = 0; j < k; ++j) {
    m[o + j] = p[static_cast<std::size_t>(n + j)];
    tau = tau + T(0.5) * p[static_cast<std::size_t>(j)] * p[static_cast<std::size_t>(n + j)];
  }
  for (int l = 0; l < o; ++l) {
    m[l] = p[static_cast<std::size_t>(k + l)];
    m[n + l] = p[static_cast<std::size_t>(n + k + l)];
  }
  m[2 * n - k] = tau;
}

}  // namespace detail

inline LevelSetFunction LevelSetFunction::lift(const GraphFunction& phi, double det_threshold) {
  const Splitting& s = phi.splitting();
  const auto gvars = s.group_vars();
  const int n = s.n(), k = s.k();

  std::vector<Expr> repl;
  for (int l = k; l < n; ++l) repl.push_back(Expr::variable(l, gvars));
  for (int j = 0; j < k; ++j) repl.push_back(Expr::variable(n + j, gvars));
  for (int l = k; l < n; ++l) repl.push_back(Expr::variable(n + l, gvars));
  std::string tau = "t + 0.5*(";
  for (int j = 0; j < k; ++j) tau += (j ? " + " : "") + gvars[static_cast<std::size_t>(j)] + "*" +
                                     gvars[static_cast<std::size_t>(n + j)];
  tau += ")";
  repl.push_back(parse_expr(tau, gvars));

  std::vector<ScalarField> comps;
  for (int i = 0; i < k; ++i) {
    const ScalarField& c = phi.component(static_cast<std::size_t>(i));
    const Expr xi = Expr::variable(i, gvars);
    if (const Expr* e = c.expr()) {
      comps.push_back(ScalarField::from_expr(xi - substitute(*e, repl), c.smoothness()));
      continue;
    }
    auto fn = [s, c, i](std::span<const double> p) {
      thread_local std::vector<double> m;
      m.resize(s.base_dim());
      detail::base_of<double>(s, p, m.data());
      return p[static_cast<std::size_t>(i)] - c(m);
    };
    FunctionFieldImpl::DualFn dual;
    if (c.has_dual()) {
      dual = [s, c, i](std::span<const Dual> p) {
        std::vector<Dual> m(s.base_dim());
        detail::base_of<Dual>(s, p, m.data());
        return p[static_cast<std::size_t>(i)] - c.eval_dual(m);
      };
    }
    comps.push_back(ScalarField::from_function(2 * static_cast<std::size_t>(n) + 1, fn,
                                               std::nullopt, c.smoothness(), dual));
  }
  return LevelSetFunction(s, std::move(comps), std::nullopt, det_threshold);
}

}  // namespace hcalc
