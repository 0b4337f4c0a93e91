#pragma once

// Config resolution, validation and the subcommand pipelines behind the
// hcalc front end. Resolution applies defaults and records every value used,
// so a report carries the complete configuration it was produced from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hcalc/cli/config.hpp"
#include "hcalc/cli/report.hpp"
#include "hcalc/hcalc.hpp"

namespace hcalc::cli {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> cmds = {"area", "jacobian", "uid-check", "holder",
                                                "approx", "measure", "dist"};
  return cmds;
}

inline bool is_subcommand(const std::string& c) {
  const auto& s = subcommands();
  return std::find(s.begin(), s.end(), c) != s.end();
}

struct Diagnostic {
  int line = 0;
  std::string where;
  std::string message;

  std::string str() const {
    std::string s = line > 0 ? "line " + std::to_string(line) + ": " : "";
    return s + (where.empty() ? "" : where + ": ") + message;
  }
};

namespace detail {

enum class Kind { Int, Num, Str, Bool, NumArr, StrArr, NumMat };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Int: return "an integer";
    case Kind::Num: return "a number";
    case Kind::Str: return "a string";
    case Kind::Bool: return "a boolean";
    case Kind::NumArr: return "an array of numbers";
    case Kind::StrArr: return "an array of strings";
    case Kind::NumMat: return "an array of number arrays";
  }
  return "";
}

inline const std::map<std::string, std::map<std::string, Kind>>& schema() {
  static const std::map<std::string, std::map<std::string, Kind>> s = {
      {"run", {{"command", Kind::Str}, {"seed", Kind::Int}}},
      {"splitting", {{"n", Kind::Int}, {"k", Kind::Int}}},
      {"surface", {{"kind", Kind::Str}, {"components", Kind::StrArr}, {"det_threshold", Kind::Num}}},
      {"domain", {{"lo", Kind::NumArr}, {"hi", Kind::NumArr}}},
      {"area", {{"method", Kind::Str}, {"simpson_nodes", Kind::Int}, {"qmc_points", Kind::Int},
                {"force_qmc", Kind::Bool}}},
      {"jacobian", {{"point", Kind::NumArr}, {"points", Kind::NumMat}, {"method", Kind::Str}}},
      {"uid", {{"center", Kind::NumArr}, {"radii", Kind::NumArr}, {"probes", Kind::Int}, {"seed", Kind::Int},
               {"method", Kind::Str}, {"slack", Kind::Num}}},
      {"holder", {{"window_lo", Kind::NumArr}, {"window_hi", Kind::NumArr}, {"center", Kind::NumArr},
                  {"radii", Kind::NumArr}, {"pairs", Kind::Int}, {"seed", Kind::Int}, {"slack", Kind::Num}}},
      {"approx", {{"epsilons", Kind::NumArr}, {"grid_nodes", Kind::Int}, {"mollifier_resolution", Kind::Int},
                  {"grid_lo", Kind::NumArr}, {"grid_hi", Kind::NumArr}, {"slack", Kind::Num}}},
      {"measure", {{"set", Kind::Str}, {"m", Kind::Num}, {"deltas", Kind::NumArr}, {"families", Kind::StrArr},
                   {"lo", Kind::NumArr}, {"hi", Kind::NumArr}, {"from", Kind::NumArr}, {"to", Kind::NumArr},
                   {"points", Kind::NumMat}, {"covers", Kind::Bool}}},
      {"dist", {{"metric", Kind::Str}, {"p", Kind::NumArr}, {"q", Kind::NumArr}, {"a", Kind::NumArr},
                {"b", Kind::NumArr}}},
  };
  return s;
}

inline bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::Int: return v.is_number_integer();
    case Kind::Num: return v.is_number();
    case Kind::Str: return v.is_string();
    case Kind::Bool: return v.is_boolean();
    case Kind::NumArr:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
    case Kind::StrArr:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string(); });
    case Kind::NumMat:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return matches(x, Kind::NumArr); });
  }
  return false;
}

inline const std::vector<double> kDefaultRadii = {0.2, 0.1, 0.05, 0.025};

}  // namespace detail

/// Everything a subcommand needs, built from a config without running any
/// numerics. `resolved` mirrors the config with defaults filled in.
struct Plan {
  std::string command;
  std::vector<Diagnostic> diagnostics;
  json resolved = json::object();
  std::optional<Splitting> splitting;
  std::optional<Box> domain;
  std::optional<GraphFunction> phi;
  std::optional<LevelSetFunction> levelset;
  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

class Resolver {
 public:
  Resolver(const ConfigDoc& doc, Plan& plan) : doc_(doc), plan_(plan) {}

  void error(const std::string& sec, const std::string& key, const std::string& msg) {
    plan_.diagnostics.push_back(
        {doc_.line_of(sec, key), key.empty() ? "[" + sec + "]" : sec + "." + key, msg});
  }

  bool has(const std::string& sec, const std::string& key = "") const {
    if (!doc_.data.contains(sec)) return false;
    return key.empty() || doc_.data[sec].contains(key);
  }

  const json* raw(const std::string& sec, const std::string& key) const {
    if (!has(sec, key)) return nullptr;
    return &doc_.data[sec][key];
  }

  template <class T>
  std::optional<T> opt(const std::string& sec, const std::string& key) {
    const json* v = raw(sec, key);
    if (!v) return std::nullopt;
    const Kind k = schema().at(sec).at(key);
    if (!matches(*v, k)) return std::nullopt;  // reported by check_schema
    T out = v->get<T>();
    plan_.resolved[sec][key] = out;
    return out;
  }

  template <class T>
  T get(const std::string& sec, const std::string& key, T fallback) {
    if (auto v = opt<T>(sec, key)) return *v;
    plan_.resolved[sec][key] = fallback;
    return fallback;
  }

  template <class T>
  std::optional<T> require(const std::string& sec, const std::string& key) {
    if (!has(sec, key)) {
      if (!has(sec))
        plan_.diagnostics.push_back({0, "[" + sec + "]", "missing section (needs '" + key + "')"});
      else
        error(sec, "", "missing key '" + key + "'");
      return std::nullopt;
    }
    return opt<T>(sec, key);
  }

  void check_schema() {
    for (const auto& [sec, body] : doc_.data.items()) {
      auto it = schema().find(sec);
      if (it == schema().end()) {
        error(sec, "", "unknown section");
        continue;
      }
      for (const auto& [key, val] : body.items()) {
        auto kt = it->second.find(key);
        if (kt == it->second.end()) {
          error(sec, key, "unknown key");
        } else if (!matches(val, kt->second)) {
          error(sec, key, std::string("must be ") + kind_name(kt->second));
        }
      }
    }
  }

 private:
  const ConfigDoc& doc_;
  Plan& plan_;
};

inline std::string vars_hint(const std::vector<std::string>& vars) {
  std::string s;
  for (const auto& v : vars) s += (s.empty() ? "" : ", ") + v;
  return s;
}

inline bool check_len(Resolver& R, const std::string& sec, const std::string& key, const std::vector<double>& v,
                      std::size_t want) {
  if (v.size() == want) return true;
  R.error(sec, key, "expected " + std::to_string(want) + " entries, got " + std::to_string(v.size()));
  return false;
}

inline std::optional<Box> make_box(Resolver& R, const std::string& sec, const std::string& lo_key,
                                   const std::string& hi_key, const std::vector<double>& lo,
                                   const std::vector<double>& hi, std::size_t dim) {
  if (!check_len(R, sec, lo_key, lo, dim) || !check_len(R, sec, hi_key, hi, dim)) return std::nullopt;
  bool ok = true;
  for (std::size_t i = 0; i < dim; ++i)
    if (!(lo[i] < hi[i])) {
      R.error(sec, lo_key,
              "degenerate box: " + lo_key + "[" + std::to_string(i) + "] must be < " + hi_key + "[" +
                  std::to_string(i) + "]");
      ok = false;
    }
  if (!ok) return std::nullopt;
  return Box(lo, hi);
}

inline bool check_radii_cfg(Resolver& R, const std::string& sec, const std::string& key,
                            const std::vector<double>& r) {
  if (r.empty()) {
    R.error(sec, key, "must not be empty");
    return false;
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0)) {
      R.error(sec, key, "entries must be positive");
      return false;
    }
    if (i > 0 && !(r[i] < r[i - 1])) {
      R.error(sec, key, "entries must be strictly decreasing");
      return false;
    }
  }
  return true;
}

inline bool inside(const Box& b, const std::vector<double>& p) { return b.contains(p, 1e-12); }

// splitting, surface and domain.
inline void resolve_surface(Resolver& R, Plan& plan) {
  auto n = R.require<long long>("splitting", "n");
  auto k = R.require<long long>("splitting", "k");
  if (!n || !k) return;
  if (*n < 1 || *n > 8) {
    R.error("splitting", "n", "n must satisfy 1 <= n <= 8");
    return;
  }
  if (*k < 1 || *k > *n) {
    R.error("splitting", "k", "splitting constraint 1 <= k <= n violated (k = " + std::to_string(*k) +
                                  ", n = " + std::to_string(*n) + ")");
    return;
  }
  const Splitting s(static_cast<int>(*n), static_cast<int>(*k));
  plan.splitting = s;

  auto lo = R.require<std::vector<double>>("domain", "lo");
  auto hi = R.require<std::vector<double>>("domain", "hi");
  if (lo && hi) plan.domain = make_box(R, "domain", "lo", "hi", *lo, *hi, s.base_dim());

  const std::string kind = R.get<std::string>("surface", "kind", "graph");
  if (kind != "graph" && kind != "levelset") {
    R.error("surface", "kind", "must be \"graph\" or \"levelset\"");
    return;
  }
  const double det = R.get<double>("surface", "det_threshold", 1e-10);
  if (!(det >= 0.0)) R.error("surface", "det_threshold", "must be >= 0");
  auto comps = R.require<std::vector<std::string>>("surface", "components");
  if (!comps) return;
  if (comps->size() != static_cast<std::size_t>(s.k())) {
    R.error("surface", "components",
            "expected k = " + std::to_string(s.k()) + " expressions, got " + std::to_string(comps->size()));
    return;
  }
  const auto vars = kind == "graph" ? s.base_vars() : s.group_vars();
  std::vector<ScalarField> fields;
  for (std::size_t i = 0; i < comps->size(); ++i) {
    const std::string where = "components[" + std::to_string(i) + "]";
    try {
      fields.push_back(ScalarField::parse((*comps)[i], vars));
    } catch (const UnknownIdentifier& e) {
      R.error("surface", "components",
              where + ": unknown variable '" + e.name() + "' for a " + kind + " surface (allowed: " +
                  vars_hint(vars) + ")");
    } catch (const ParseError& e) {
      R.error("surface", "components", where + ": " + e.what());
    }
  }
  if (fields.size() != comps->size() || !plan.domain || !(det >= 0.0)) return;
  if (kind == "graph") {
    plan.phi = GraphFunction(s, std::move(fields), *plan.domain);
  } else {
    plan.levelset = LevelSetFunction(s, std::move(fields), std::nullopt, det);
    plan.phi = implicit_graph(*plan.levelset, *plan.domain);
  }
}

inline std::uint64_t seed_for(Resolver& R, const Plan& plan, const std::string& sec, std::uint64_t module_default) {
  std::uint64_t fallback = module_default;
  if (plan.resolved.contains("run") && plan.resolved["run"].contains("seed"))
    fallback = plan.resolved["run"]["seed"].get<std::uint64_t>();
  const long long v = R.get<long long>(sec, "seed", static_cast<long long>(fallback));
  if (v < 0) R.error(sec, "seed", "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

inline std::string jacobian_method(Resolver& R, const Plan& plan, const std::string& sec) {
  const std::string def = plan.levelset ? "levelset" : "curve";
  const std::string m = R.get<std::string>(sec, "method", def);
  if (m != "curve" && m != "analytic" && m != "levelset") {
    R.error(sec, "method", "must be \"curve\", \"analytic\" or \"levelset\"");
  } else if (m == "levelset" && !plan.levelset) {
    R.error(sec, "method", "\"levelset\" needs surface.kind = \"levelset\"");
  } else if (m == "analytic" && plan.phi) {
    for (const auto& c : plan.phi->components())
      if (!c.has_dual()) {
        R.error(sec, "method", "\"analytic\" needs differentiable expression components");
        break;
      }
  }
  return m;
}

inline void resolve_command(Resolver& R, Plan& plan) {
  const std::string& cmd = plan.command;
  const bool needs_surface = cmd == "area" || cmd == "jacobian" || cmd == "uid-check" || cmd == "holder" ||
                             cmd == "approx" ||
                             (cmd == "measure" && R.has("measure", "set") &&
                              R.raw("measure", "set")->is_string() && *R.raw("measure", "set") == "graph") ||
                             (cmd == "dist" && R.has("dist", "metric") && R.raw("dist", "metric")->is_string() &&
                              *R.raw("dist", "metric") != "dinf");
  if (needs_surface || R.has("splitting") || R.has("surface")) resolve_surface(R, plan);
  if (needs_surface && !plan.phi) return;

  if (cmd == "area") {
    const std::string method = jacobian_method(R, plan, "area");
    const auto nodes = R.get<long long>("area", "simpson_nodes", 33);
    if (nodes < 3 || nodes % 2 == 0) R.error("area", "simpson_nodes", "must be odd and >= 3");
    if (R.get<long long>("area", "qmc_points", 1LL << 16) < 1) R.error("area", "qmc_points", "must be >= 1");
    R.get<bool>("area", "force_qmc", false);
    (void)method;
  } else if (cmd == "jacobian") {
    jacobian_method(R, plan, "jacobian");
    std::vector<std::vector<double>> pts;
    if (auto p = R.opt<std::vector<double>>("jacobian", "point")) pts.push_back(*p);
    if (auto ps = R.opt<std::vector<std::vector<double>>>("jacobian", "points"))
      pts.insert(pts.end(), ps->begin(), ps->end());
    if (pts.empty()) {
      const auto c = plan.domain->center();
      R.get<std::vector<double>>("jacobian", "point", c);
      pts.push_back(c);
    }
    for (const auto& p : pts)
      if (check_len(R, "jacobian", "point", p, plan.splitting->base_dim()) && !inside(*plan.domain, p))
        R.error("jacobian", "point", "point lies outside the domain");
  } else if (cmd == "uid-check") {
    jacobian_method(R, plan, "uid");
    const auto c = R.get<std::vector<double>>("uid", "center", plan.domain->center());
    if (check_len(R, "uid", "center", c, plan.splitting->base_dim()) && !inside(*plan.domain, c))
      R.error("uid", "center", "center lies outside the domain");
    check_radii_cfg(R, "uid", "radii", R.get<std::vector<double>>("uid", "radii", kDefaultRadii));
    if (R.get<long long>("uid", "probes", 256) < 2) R.error("uid", "probes", "must be >= 2");
    seed_for(R, plan, "uid", 7);
    if (!(R.get<double>("uid", "slack", 0.05) >= 0.0)) R.error("uid", "slack", "must be >= 0");
  } else if (cmd == "holder") {
    const auto lo = R.get<std::vector<double>>("holder", "window_lo", plan.domain->lo());
    const auto hi = R.get<std::vector<double>>("holder", "window_hi", plan.domain->hi());
    auto win = make_box(R, "holder", "window_lo", "window_hi", lo, hi, plan.splitting->base_dim());
    if (win && !plan.domain->contains_box(*win)) R.error("holder", "window_lo", "window must lie inside the domain");
    const auto c = R.get<std::vector<double>>("holder", "center", win ? win->center() : plan.domain->center());
    if (check_len(R, "holder", "center", c, plan.splitting->base_dim()) && !inside(*plan.domain, c))
      R.error("holder", "center", "center lies outside the domain");
    check_radii_cfg(R, "holder", "radii", R.get<std::vector<double>>("holder", "radii", kDefaultRadii));
    if (R.get<long long>("holder", "pairs", 4096) < 1) R.error("holder", "pairs", "must be >= 1");
    seed_for(R, plan, "holder", 11);
    if (!(R.get<double>("holder", "slack", 0.05) >= 0.0)) R.error("holder", "slack", "must be >= 0");
  } else if (cmd == "approx") {
    check_radii_cfg(R, "approx", "epsilons", R.get<std::vector<double>>("approx", "epsilons", kDefaultRadii));
    const long long def_nodes = plan.splitting->base_dim() <= 3 ? 33 : 9;
    if (R.get<long long>("approx", "grid_nodes", def_nodes) < 2) R.error("approx", "grid_nodes", "must be >= 2");
    if (R.get<long long>("approx", "mollifier_resolution", default_mollifier_resolution(
                                                              2 * static_cast<std::size_t>(plan.splitting->n()) + 1)) < 1)
      R.error("approx", "mollifier_resolution", "must be >= 1");
    const auto lo = R.get<std::vector<double>>("approx", "grid_lo", plan.domain->lo());
    const auto hi = R.get<std::vector<double>>("approx", "grid_hi", plan.domain->hi());
    auto grid = make_box(R, "approx", "grid_lo", "grid_hi", lo, hi, plan.splitting->base_dim());
    if (grid && !plan.domain->contains_box(*grid)) R.error("approx", "grid_lo", "grid box must lie inside the domain");
    if (!(R.get<double>("approx", "slack", 0.05) >= 0.0)) R.error("approx", "slack", "must be >= 0");
  } else if (cmd == "measure") {
    const std::string set = R.get<std::string>("measure", "set", "graph");
    std::optional<double> m_default;
    int n = plan.splitting ? plan.splitting->n() : 0;
    if (set == "graph") {
      m_default = 2.0 * plan.splitting->n() + 2.0 - plan.splitting->k();
    } else if (set == "box") {
      auto lo = R.require<std::vector<double>>("measure", "lo");
      auto hi = R.require<std::vector<double>>("measure", "hi");
      if (lo && hi) {
        if (lo->size() < 3 || lo->size() % 2 == 0) {
          R.error("measure", "lo", "box bounds must have length 2n+1");
        } else if (check_len(R, "measure", "hi", *hi, lo->size())) {
          n = static_cast<int>((lo->size() - 1) / 2);
          for (std::size_t i = 0; i < lo->size(); ++i)
            if (!((*lo)[i] <= (*hi)[i])) R.error("measure", "lo", "box needs lo <= hi on every axis");
          m_default = 2.0 * n + 2.0;
        }
      }
    } else if (set == "segment") {
      auto a = R.require<std::vector<double>>("measure", "from");
      auto b = R.require<std::vector<double>>("measure", "to");
      if (a && b) {
        if (a->size() < 3 || a->size() % 2 == 0) R.error("measure", "from", "points must have length 2n+1");
        else if (check_len(R, "measure", "to", *b, a->size())) n = static_cast<int>((a->size() - 1) / 2);
      }
    } else if (set == "points") {
      auto pts = R.require<std::vector<std::vector<double>>>("measure", "points");
      if (pts) {
        if (pts->empty()) R.error("measure", "points", "must not be empty");
        for (const auto& p : *pts)
          if (p.size() < 3 || p.size() % 2 == 0 || p.size() != pts->front().size()) {
            R.error("measure", "points", "points must share one length 2n+1");
            break;
          }
      }
    } else {
      R.error("measure", "set", "must be \"graph\", \"box\", \"segment\" or \"points\"");
    }
    if (plan.splitting && n != 0 && n != plan.splitting->n())
      R.error("measure", "set", "set dimension does not match splitting.n");
    double m = 0.0;
    if (auto mv = R.opt<double>("measure", "m")) {
      m = *mv;
    } else if (m_default) {
      m = R.get<double>("measure", "m", *m_default);
    } else {
      R.require<double>("measure", "m");
    }
    if (!(m >= 0.0)) R.error("measure", "m", "must be >= 0");
    check_radii_cfg(R, "measure", "deltas", R.get<std::vector<double>>("measure", "deltas", {0.2, 0.1}));
    const auto fams = R.get<std::vector<std::string>>("measure", "families",
                                                      {"hausdorff", "spherical", "centered"});
    if (fams.empty()) R.error("measure", "families", "must not be empty");
    for (const auto& f : fams)
      if (f != "hausdorff" && f != "spherical" && f != "centered")
        R.error("measure", "families", "unknown family '" + f + "'");
    R.get<bool>("measure", "covers", false);
  } else if (cmd == "dist") {
    const std::string metric = R.get<std::string>("dist", "metric", "dinf");
    if (metric == "dinf") {
      auto p = R.require<std::vector<double>>("dist", "p");
      if (p) {
        if (p->size() < 3 || p->size() % 2 == 0) {
          R.error("dist", "p", "group points must have length 2n+1");
        } else {
          const auto q = R.get<std::vector<double>>("dist", "q", std::vector<double>(p->size(), 0.0));
          check_len(R, "dist", "q", q, p->size());
        }
      }
    } else if (metric == "dphi" || metric == "rho" || metric == "sym") {
      for (const char* key : {"a", "b"}) {
        auto v = R.require<std::vector<double>>("dist", key);
        if (v && check_len(R, "dist", key, *v, plan.splitting->base_dim()) && !inside(*plan.domain, *v))
          R.error("dist", key, "point lies outside the domain");
      }
    } else {
      R.error("dist", "metric", "must be \"dinf\", \"dphi\", \"rho\" or \"sym\"");
    }
  }
}

}  // namespace detail

/// Schema, variable-name and shape checks for `command` (or for run.command
/// when `command` is empty). No numerics are run.
inline Plan resolve(const ConfigDoc& doc, const std::string& command = "") {
  Plan plan;
  detail::Resolver R(doc, plan);
  R.check_schema();
  std::string cmd = command;
  if (auto c = R.opt<std::string>("run", "command")) {
    if (!is_subcommand(*c)) R.error("run", "command", "unknown subcommand '" + *c + "'");
    else if (cmd.empty()) cmd = *c;
  }
  if (auto s = R.opt<long long>("run", "seed"); s && *s < 0) R.error("run", "seed", "must be >= 0");
  plan.command = cmd;
  try {
    if (cmd.empty()) {
      if (R.has("splitting") || R.has("surface")) detail::resolve_surface(R, plan);
    } else if (!is_subcommand(cmd)) {
      plan.diagnostics.push_back({0, "", "unknown subcommand '" + cmd + "'"});
    } else {
      detail::resolve_command(R, plan);
    }
  } catch (const Error& e) {
    plan.diagnostics.push_back({0, "", e.what()});
  }
  if (!cmd.empty()) plan.resolved["run"]["command"] = cmd;
  return plan;
}

inline std::vector<Diagnostic> validate(const ConfigDoc& doc, const std::string& command = "") {
  return resolve(doc, command).diagnostics;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
};

struct Outcome {
  int exit_code = 0;
  json report;
  /// file name -> CSV content
  std::map<std::string, Csv> tables;
};

namespace detail {

inline std::vector<double> vec(const json& j) { return j.get<std::vector<double>>(); }

inline JacobianMethod method_of(const std::string& m) {
  if (m == "analytic") return JacobianMethod::Analytic;
  if (m == "levelset") return JacobianMethod::LevelSet;
  return JacobianMethod::Curve;
}

inline IntrinsicJacobian jacobian_at(const Plan& plan, const std::string& method, const std::vector<double>& m,
                                     json* extra = nullptr) {
  const GraphFunction& phi = *plan.phi;
  switch (method_of(method)) {
    case JacobianMethod::Analytic: return analytic_jacobian(phi, m);
    case JacobianMethod::LevelSet: {
      const auto h = phi.eval(m);
      std::vector<double> p(2 * static_cast<std::size_t>(phi.splitting().n()) + 1);
      hcalc::detail::graph_point_raw(phi.splitting(), m.data(), h.data(), p.data());
      return jacobian_from_levelset(*plan.levelset, GroupPoint(p)).J;
    }
    case JacobianMethod::Curve: break;
  }
  const auto d = intrinsic_jacobian_detail(phi, m);
  if (extra) {
    (*extra)["converged"] = d.converged;
    (*extra)["max_spread"] = d.max_spread;
    (*extra)["one_sided"] = d.one_sided;
  }
  return d.J;
}

inline json run_area(const Plan& plan, const json& cfg, Outcome&) {
  AreaOptions o;
  o.simpson_nodes = static_cast<int>(cfg["simpson_nodes"].get<long long>());
  o.qmc_points = static_cast<std::size_t>(cfg["qmc_points"].get<long long>());
  o.force_qmc = cfg["force_qmc"].get<bool>();
  o.method = method_of(cfg["method"].get<std::string>());
  if (plan.levelset) o.levelset = *plan.levelset;
  const auto r = graph_area(*plan.phi, *plan.domain, o);
  return to_json(r);
}

inline json run_jacobian(const Plan& plan, const json& cfg, Outcome& out) {
  std::vector<std::vector<double>> pts;
  if (cfg.contains("point")) pts.push_back(vec(cfg["point"]));
  if (cfg.contains("points"))
    for (const auto& p : cfg["points"]) pts.push_back(vec(p));
  const std::string method = cfg["method"].get<std::string>();
  const Splitting& s = plan.phi->splitting();
  Csv table;
  for (std::size_t i = 0; i < s.base_dim(); ++i) table.header.push_back("m" + std::to_string(i));
  for (int r = 0; r < s.k(); ++r)
    for (std::size_t c = 0; c < s.fields(); ++c)
      table.header.push_back("J" + std::to_string(r) + "_" + std::to_string(c));
  json items = json::array();
  for (const auto& p : pts) {
    json item = json::object();
    item["point"] = p;
    const auto J = jacobian_at(plan, method, p, &item);
    item["matrix"] = to_json(J);
    std::vector<Cell> row(p.begin(), p.end());
    for (Eigen::Index r = 0; r < J.rows(); ++r)
      for (Eigen::Index c = 0; c < J.cols(); ++c) row.push_back(J(r, c));
    table.rows.push_back(row);
    items.push_back(item);
  }
  out.tables["jacobian.csv"] = table;
  json res = json::object();
  res["method"] = method;
  if (items.size() == 1) {
    for (auto& [k, v] : items[0].items()) res[k] = v;
  } else {
    res["points"] = items;
  }
  return res;
}

inline json run_uid(const Plan& plan, const json& cfg, Outcome& out) {
  const auto c = vec(cfg["center"]);
  const auto radii = vec(cfg["radii"]);
  ResidualOptions ro;
  ro.probes = static_cast<std::size_t>(cfg["probes"].get<long long>());
  ro.seed = cfg["seed"].get<std::uint64_t>();
  VerdictOptions vo;
  vo.slack = cfg["slack"].get<double>();
  json res = json::object();
  const auto J = jacobian_at(plan, cfg["method"].get<std::string>(), c, &res);
  res["jacobian"] = to_json(J);
  const auto id = residual_report(*plan.phi, c, J, radii, false, ro, vo);
  const auto uid = residual_report(*plan.phi, c, J, radii, true, ro, vo);
  res["id"] = to_json(id);
  res["uid"] = to_json(uid);
  Csv t;
  t.header = {"r", "id_residual", "uid_residual"};
  for (std::size_t i = 0; i < radii.size(); ++i) t.rows.push_back({radii[i], id.values[i], uid.values[i]});
  out.tables["uid-check.csv"] = t;
  return res;
}

inline json run_holder(const Plan& plan, const json& cfg, Outcome& out) {
  const Box win(vec(cfg["window_lo"]), vec(cfg["window_hi"]));
  HolderOptions ho;
  ho.pairs = static_cast<std::size_t>(cfg["pairs"].get<long long>());
  ho.seed = cfg["seed"].get<std::uint64_t>();
  VerdictOptions vo;
  vo.slack = cfg["slack"].get<double>();
  const auto rep = holder_report(*plan.phi, win, vec(cfg["center"]), vec(cfg["radii"]), ho, vo);
  Csv t;
  t.header = {"r", "alpha", "upsilon"};
  for (std::size_t i = 0; i < rep.radii.size(); ++i) t.rows.push_back({rep.radii[i], rep.alpha[i], rep.upsilon[i]});
  out.tables["holder.csv"] = t;
  return to_json(rep);
}

inline json run_approx(const Plan& plan, const json& cfg, Outcome& out) {
  ApproxOptions ao;
  ao.grid_nodes = static_cast<int>(cfg["grid_nodes"].get<long long>());
  ao.mollifier_resolution = static_cast<int>(cfg["mollifier_resolution"].get<long long>());
  const Box grid(vec(cfg["grid_lo"]), vec(cfg["grid_hi"]));
  const auto eps = vec(cfg["epsilons"]);
  const LevelSetFunction f = plan.levelset ? *plan.levelset : LevelSetFunction::lift(*plan.phi);
  const auto fam = approx_family(f, *plan.phi, eps, grid, ao);
  VerdictOptions vo;
  vo.slack = cfg["slack"].get<double>();
  json res = to_json(fam);
  bool all_ok = true;
  for (const auto& L : fam.levels) all_ok = all_ok && L.ok;
  res["phi_gap_decreasing"] = all_ok && decay_verdict(fam.sup_phi_gap(), vo);
  res["jac_gap_decreasing"] = all_ok && decay_verdict(fam.sup_jac_gap(), vo);
  Csv t;
  t.header = {"eps", "ok", "sup_phi_gap", "sup_jac_gap", "min_det", "max_residual"};
  for (const auto& L : fam.levels)
    t.rows.push_back({L.eps, L.ok ? 1.0 : 0.0, L.sup_phi_gap, L.sup_jac_gap, L.min_det, L.max_residual});
  out.tables["approx.csv"] = t;
  if (!all_ok) out.exit_code = 3;
  return res;
}

inline std::unique_ptr<SetSampler> make_sampler(const Plan& plan, const json& cfg) {
  const std::string set = cfg["set"].get<std::string>();
  if (set == "graph") return std::make_unique<GraphSet>(*plan.phi);
  if (set == "box") return std::make_unique<BoxSet>(vec(cfg["lo"]), vec(cfg["hi"]));
  if (set == "segment") {
    const auto a = vec(cfg["from"]), b = vec(cfg["to"]);
    const int n = static_cast<int>((a.size() - 1) / 2);
    return std::make_unique<CurveSet>(
        n,
        [a, b](double t) {
          std::vector<double> p(a.size());
          for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + t * (b[i] - a[i]);
          return GroupPoint(p);
        },
        0.0, 1.0);
  }
  std::vector<GroupPoint> pts;
  for (const auto& p : cfg["points"]) pts.emplace_back(vec(p));
  return std::make_unique<PointSet>(std::move(pts));
}

inline MeasureKind family_of(const std::string& f) {
  if (f == "hausdorff") return MeasureKind::Hausdorff;
  if (f == "centered") return MeasureKind::Centered;
  return MeasureKind::Spherical;
}

inline json run_measure(const Plan& plan, const json& cfg, Outcome& out) {
  const auto sampler = make_sampler(plan, cfg);
  const double m = cfg["m"].get<double>();
  const auto fams = cfg["families"].get<std::vector<std::string>>();
  const bool covers = cfg["covers"].get<bool>();
  CoveringOptions co;
  co.keep_cover = covers;
  json rows = json::array();
  Csv t;
  t.header = {"delta", "family", "value", "cover_size", "samples"};
  Csv ct;
  ct.header = {"delta", "family", "element", "coord", "value"};
  for (double d : vec(cfg["deltas"])) {
    std::map<std::string, CoveringEstimate> got;
    const bool balls = std::count(fams.begin(), fams.end(), "spherical") + std::count(fams.begin(), fams.end(), "centered") > 0;
    if (balls) {
      auto [sph, cen] = hcalc::detail::ball_estimates(*sampler, m, d, co);
      got["spherical"] = std::move(sph);
      got["centered"] = std::move(cen);
    }
    if (std::count(fams.begin(), fams.end(), "hausdorff"))
      got["hausdorff"] = premeasure_estimate(*sampler, {MeasureKind::Hausdorff, m}, d, co);
    for (const auto& f : fams) {
      const auto& e = got.at(f);
      json j = to_json(e);
      rows.push_back(j);
      t.rows.push_back({d, f, e.value, static_cast<double>(e.cover_size), static_cast<double>(e.samples)});
      if (covers)
        for (std::size_t i = 0; i < e.cover.size(); ++i) {
          const auto& el = e.cover[i];
          for (std::size_t c = 0; c < el.center.size(); ++c)
            ct.rows.push_back({d, f, static_cast<double>(i), "c" + std::to_string(c), el.center[c]});
          if (el.sides.empty()) {
            ct.rows.push_back({d, f, static_cast<double>(i), "radius", el.radius});
          } else {
            for (std::size_t c = 0; c < el.sides.size(); ++c)
              ct.rows.push_back({d, f, static_cast<double>(i), "side" + std::to_string(c), el.sides[c]});
          }
          ct.rows.push_back({d, f, static_cast<double>(i), "diam", el.diam});
        }
    }
  }
  out.tables["measure.csv"] = t;
  if (covers) out.tables["measure_covers.csv"] = ct;
  json res = json::object();
  res["set"] = sampler->describe();
  res["m"] = m;
  res["beta"] = beta_const(m);
  res["estimates"] = rows;
  return res;
}

inline json run_dist(const Plan& plan, const json& cfg, Outcome&) {
  const std::string metric = cfg["metric"].get<std::string>();
  json res = json::object();
  res["metric"] = metric;
  if (metric == "dinf") {
    res["distance"] = dist_inf(GroupPoint(vec(cfg["p"])), GroupPoint(vec(cfg["q"])));
    return res;
  }
  const Splitting& s = plan.phi->splitting();
  const auto a = BasePoint::from_flat(s, vec(cfg["a"]));
  const auto b = BasePoint::from_flat(s, vec(cfg["b"]));
  double d = 0.0;
  if (metric == "dphi") d = graph_dist(*plan.phi, a, b);
  else if (metric == "rho") d = rho_dist(*plan.phi, a, b);
  else d = sym_graph_dist(*plan.phi, a, b);
  res["distance"] = d;
  return res;
}

inline const std::map<std::string, std::string>& section_of() {
  static const std::map<std::string, std::string> m = {
      {"area", "area"},     {"jacobian", "jacobian"}, {"uid-check", "uid"}, {"holder", "holder"},
      {"approx", "approx"}, {"measure", "measure"},   {"dist", "dist"}};
  return m;
}

}  // namespace detail

inline json report_header(const std::string& cmd, const json& resolved) {
  json r = json::object();
  r["artifact"] = "hcalc";
  r["version"] = kVersion;
  r["command"] = cmd;
  r["status"] = "ok";
  r["config"] = resolved;
  return r;
}

/// Resolves and runs `cmd`. Exit codes: 0 success, 2 configuration error,
/// 3 numerical failure. The report is filled in every case.
inline Outcome run(const std::string& cmd, const ConfigDoc& doc, const RunOptions& ro = {}) {
  Outcome out;
  ConfigDoc d = doc;
  if (ro.seed) {
    if (!d.data.contains("run")) d.data["run"] = json::object();
    d.data["run"]["seed"] = *ro.seed;
  }
  Plan plan = resolve(d, cmd);
  out.report = report_header(cmd, plan.resolved);
  if (!plan.ok()) {
    out.exit_code = 2;
    out.report["status"] = "error";
    json diags = json::array();
    for (const auto& g : plan.diagnostics) diags.push_back(g.str());
    out.report["error"] = {{"kind", "config"}, {"diagnostics", diags}};
    return out;
  }
  const std::string sec = detail::section_of().at(cmd);
  const json cfg = plan.resolved.contains(sec) ? plan.resolved[sec] : json::object();
  try {
    json res;
    if (cmd == "area") res = detail::run_area(plan, cfg, out);
    else if (cmd == "jacobian") res = detail::run_jacobian(plan, cfg, out);
    else if (cmd == "uid-check") res = detail::run_uid(plan, cfg, out);
    else if (cmd == "holder") res = detail::run_holder(plan, cfg, out);
    else if (cmd == "approx") res = detail::run_approx(plan, cfg, out);
    else if (cmd == "measure") res = detail::run_measure(plan, cfg, out);
    else res = detail::run_dist(plan, cfg, out);
    out.report["results"] = res;
    if (out.exit_code != 0) out.report["status"] = "error";
  } catch (const NumericalError& e) {
    out.exit_code = 3;
    out.report["status"] = "error";
    out.report["error"] = {{"kind", "numerical"}, {"message", e.what()}};
    out.tables.clear();
  } catch (const Error& e) {
    out.exit_code = 2;
    out.report["status"] = "error";
    out.report["error"] = {{"kind", "config"}, {"message", e.what()}};
    out.tables.clear();
  }
  return out;
}

}  // namespace hcalc::cli
