#pragma once

// Small arithmetic expression language over a fixed, ordered variable list.
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] base ['^' int]
//   base   := number | ident | fn '(' expr ')' | '(' expr ')'
//
// Functions: sin cos exp sqrt abs sign. The identifier `pi` is a constant
// unless it is also a declared variable.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hcalc/dual.hpp"
#include "hcalc/error.hpp"

namespace hcalc {

enum class Op { Const, Var, Neg, Sin, Cos, Exp, Sqrt, Abs, Sign, Add, Sub, Mul, Div, Pow };

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int index = 0;       // Var: variable index; Pow: exponent
  int a = -1;
  int b = -1;
};

class Expr {
 public:
  Expr() : Expr(0.0, {}) {}

  static Expr constant(double c, std::vector<std::string> vars) { return Expr(c, std::move(vars)); }

  static Expr variable(int i, std::vector<std::string> vars) {
    if (i < 0 || i >= static_cast<int>(vars.size()))
      throw DomainError("Expr::variable: index out of range");
    Expr e(0.0, std::move(vars));
    e.nodes_[0] = ExprNode{Op::Var, 0.0, i, -1, -1};
    return e;
  }

  const std::vector<std::string>& vars() const noexcept { return vars_; }
  std::size_t arity() const noexcept { return vars_.size(); }
  const std::vector<ExprNode>& nodes() const noexcept { return nodes_; }
  int root() const noexcept { return static_cast<int>(nodes_.size()) - 1; }

  bool is_constant() const {
    for (const auto& n : nodes_)
      if (n.op == Op::Var) return false;
    return true;
  }

  /// Indices of the variables that actually occur.
  std::set<int> free_vars() const {
    std::set<int> s;
    for (const auto& n : nodes_)
      if (n.op == Op::Var) s.insert(n.index);
    return s;
  }

  /// True if any abs/sign/sqrt node occurs, i.e. derivatives may hit a kink.
  bool has_kinks() const {
    for (const auto& n : nodes_)
      if (n.op == Op::Abs || n.op == Op::Sign || n.op == Op::Sqrt) return true;
    return false;
  }

  template <class T>
  T eval(std::span<const T> x) const {
    if (x.size() != vars_.size())
      throw DimensionError("Expr::eval: expected " + std::to_string(vars_.size()) +
                           " arguments, got " + std::to_string(x.size()));
    std::vector<T> val(nodes_.size());
    eval_into(x, val.data());
    return val.back();
  }

  double operator()(std::span<const double> x) const {
    if (x.size() != vars_.size())
      throw DimensionError("Expr::eval: expected " + std::to_string(vars_.size()) +
                           " arguments, got " + std::to_string(x.size()));
    thread_local std::vector<double> scratch;
    scratch.resize(nodes_.size());
    eval_into(x, scratch.data());
    return scratch[nodes_.size() - 1];
  }

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string to_string() const { return print(root()); }

  friend Expr combine(Op op, const Expr& l, const Expr& r);
  friend Expr negate(const Expr& e);
  friend Expr substitute(const Expr& e, const std::vector<Expr>& repl);
  friend class ExprParser;

 private:
  Expr(double c, std::vector<std::string> vars) : vars_(std::move(vars)) {
    nodes_.push_back(ExprNode{Op::Const, c, 0, -1, -1});
  }

  template <class T>
  void eval_into(std::span<const T> x, T* val) const {
    using std::cos;
    using std::exp;
    using std::sin;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const ExprNode& n = nodes_[i];
      switch (n.op) {
        case Op::Const: val[i] = T(n.value); break;
        case Op::Var: val[i] = x[static_cast<std::size_t>(n.index)]; break;
        case Op::Neg: val[i] = -val[n.a]; break;
        case Op::Sin: val[i] = sin(val[n.a]); break;
        case Op::Cos: val[i] = cos(val[n.a]); break;
        case Op::Exp: val[i] = exp(val[n.a]); break;
        case Op::Sqrt: val[i] = checked_sqrt(val[n.a]); break;
        case Op::Abs: val[i] = checked_abs(val[n.a]); break;
        case Op::Sign: val[i] = checked_sign(val[n.a]); break;
        case Op::Add: val[i] = val[n.a] + val[n.b]; break;
        case Op::Sub: val[i] = val[n.a] - val[n.b]; break;
        case Op::Mul: val[i] = val[n.a] * val[n.b]; break;
        case Op::Div: val[i] = val[n.a] / val[n.b]; break;
        case Op::Pow: val[i] = ipow(val[n.a], n.index); break;
      }
    }
  }

  static double checked_sqrt(double a) {
    if (a < 0.0) throw DomainError("sqrt of a negative number");
    return std::sqrt(a);
  }
  static Dual checked_sqrt(Dual a) { return sqrt(a); }
  static double checked_abs(double a) { return std::abs(a); }
  static Dual checked_abs(Dual a) { return abs(a); }
  static double checked_sign(double a) { return sign(a); }
  static Dual checked_sign(Dual a) { return sign(a); }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  std::string print(int i) const {
    const ExprNode& n = nodes_[static_cast<std::size_t>(i)];
    auto bin = [&](const char* op) { return "(" + print(n.a) + " " + op + " " + print(n.b) + ")"; };
    switch (n.op) {
      case Op::Const: return n.value < 0.0 || std::signbit(n.value) ? "(" + num(n.value) + ")" : num(n.value);
      case Op::Var: return vars_[static_cast<std::size_t>(n.index)];
      case Op::Neg: return "(-" + print(n.a) + ")";
      case Op::Sin: return "sin(" + print(n.a) + ")";
      case Op::Cos: return "cos(" + print(n.a) + ")";
      case Op::Exp: return "exp(" + print(n.a) + ")";
      case Op::Sqrt: return "sqrt(" + print(n.a) + ")";
      case Op::Abs: return "abs(" + print(n.a) + ")";
      case Op::Sign: return "sign(" + print(n.a) + ")";
      case Op::Add: return bin("+");
      case Op::Sub: return bin("-");
      case Op::Mul: return bin("*");
      case Op::Div: return bin("/");
      case Op::Pow: return "((" + print(n.a) + ")^" + std::to_string(n.index) + ")";
    }
    return "";
  }

  int push(ExprNode n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Appends the nodes of `e` and returns the index of its root.
  int append(const Expr& e) {
    const int off = static_cast<int>(nodes_.size());
    for (ExprNode n : e.nodes_) {
      if (n.a >= 0) n.a += off;
      if (n.b >= 0) n.b += off;
      nodes_.push_back(n);
    }
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<std::string> vars_;
  std::vector<ExprNode> nodes_;
};

inline Expr combine(Op op, const Expr& l, const Expr& r) {
  if (l.vars_ != r.vars_) throw DimensionError("Expr: operands use different variable lists");
  Expr out(0.0, l.vars_);
  out.nodes_.clear();
  const int a = out.append(l);
  const int b = out.append(r);
  out.push(ExprNode{op, 0.0, 0, a, b});
  return out;
}

inline Expr negate(const Expr& e) {
  Expr out = e;
  const int a = out.root();
  out.push(ExprNode{Op::Neg, 0.0, 0, a, -1});
  return out;
}

inline Expr operator+(const Expr& l, const Expr& r) { return combine(Op::Add, l, r); }
inline Expr operator-(const Expr& l, const Expr& r) { return combine(Op::Sub, l, r); }
inline Expr operator*(const Expr& l, const Expr& r) { return combine(Op::Mul, l, r); }
inline Expr operator/(const Expr& l, const Expr& r) { return combine(Op::Div, l, r); }

/// Replaces variable i of `e` by repl[i]. All replacements must share one
/// variable list, which becomes the variable list of the result.
inline Expr substitute(const Expr& e, const std::vector<Expr>& repl) {
  if (repl.size() != e.arity())
    throw DimensionError("substitute: need one replacement per variable");
  std::vector<std::string> vars = repl.empty() ? std::vector<std::string>{} : repl[0].vars_;
  for (const auto& r : repl)
    if (r.vars_ != vars) throw DimensionError("substitute: replacements disagree on variables");
  Expr out(0.0, vars);
  out.nodes_.clear();
  std::vector<int> map(e.nodes_.size());
  for (std::size_t i = 0; i < e.nodes_.size(); ++i) {
    ExprNode n = e.nodes_[i];
    if (n.op == Op::Var) {
      map[i] = out.append(repl[static_cast<std::size_t>(n.index)]);
      continue;
    }
    if (n.a >= 0) n.a = map[static_cast<std::size_t>(n.a)];
    if (n.b >= 0) n.b = map[static_cast<std::size_t>(n.b)];
    map[i] = out.push(n);
  }
  return out;
}

class ExprParser {
 public:
  ExprParser(std::string_view text, const std::vector<std::string>& vars)
      : s_(text), out_(0.0, vars) {
    out_.nodes_.clear();
  }

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    expr();
    skip();
    if (pos_ < s_.size())
      throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return std::move(out_);
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size())
        throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  int expr() {
    int l = term();
    for (;;) {
      if (accept('+')) {
        const int r = term();
        l = out_.push(ExprNode{Op::Add, 0.0, 0, l, r});
      } else if (accept('-')) {
        const int r = term();
        l = out_.push(ExprNode{Op::Sub, 0.0, 0, l, r});
      } else {
        return l;
      }
    }
  }

  int term() {
    int l = factor();
    for (;;) {
      if (accept('*')) {
        const int r = factor();
        l = out_.push(ExprNode{Op::Mul, 0.0, 0, l, r});
      } else if (accept('/')) {
        const int r = factor();
        l = out_.push(ExprNode{Op::Div, 0.0, 0, l, r});
      } else {
        return l;
      }
    }
  }

  int factor() {
    const bool neg = accept('-');
    int b = base();
    if (accept('^')) {
      skip();
      const std::size_t at = pos_;
      bool eneg = false;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
        eneg = s_[pos_] == '-';
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) throw ParseError("exponent must be an integer", at);
      int e = 0;
      auto [p, ec] = std::from_chars(s_.data() + digits, s_.data() + pos_, e);
      if (ec != std::errc() || e > 1024) throw ParseError("exponent out of range", at);
      (void)p;
      b = out_.push(ExprNode{Op::Pow, 0.0, eneg ? -e : e, b, -1});
    }
    if (neg) b = out_.push(ExprNode{Op::Neg, 0.0, 0, b, -1});
    return b;
  }

  int base() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const int e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  int number() {
    const std::size_t start = pos_;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc() || !std::isfinite(v)) throw ParseError("malformed number", start);
    pos_ = static_cast<std::size_t>(p - s_.data());
    return out_.push(ExprNode{Op::Const, v, 0, -1, -1});
  }

  int ident() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name(s_.substr(start, pos_ - start));
    const auto& vars = out_.vars_;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return out_.push(ExprNode{Op::Var, 0.0, static_cast<int>(i), -1, -1});

    static const std::pair<const char*, Op> fns[] = {{"sin", Op::Sin},   {"cos", Op::Cos},
                                                     {"exp", Op::Exp},   {"sqrt", Op::Sqrt},
                                                     {"abs", Op::Abs},   {"sign", Op::Sign}};
    for (const auto& [fname, op] : fns) {
      if (name == fname) {
        expect('(');
        const int a = expr();
        expect(')');
        return out_.push(ExprNode{op, 0.0, 0, a, -1});
      }
    }
    if (name == "pi") return out_.push(ExprNode{Op::Const, M_PI, 0, -1, -1});
    throw UnknownIdentifier(name, start);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  Expr out_;
};

inline Expr parse_expr(std::string_view text, const std::vector<std::string>& vars) {
  return ExprParser(text, vars).parse();
}

}  // namespace hcalc
