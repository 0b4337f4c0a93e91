#pragma once

// JSON and CSV serialization of results. Numbers in CSV use %.17g so files
// round-trip and compare byte for byte across runs.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "hcalc/hcalc.hpp"

namespace hcalc::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kCsvVersion = 1;

using Cell = std::variant<double, std::string>;

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ",";
        if (const auto* d = std::get_if<double>(&r[i])) {
          if (std::isnan(*d)) {
            s += "nan";
          } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", *d);
            s += buf;
          }
        } else {
          s += std::get<std::string>(r[i]);
        }
      }
      s += "\n";
    }
    return s;
  }
};

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Eigen::MatrixXd& J) {
  json m = json::array();
  for (Eigen::Index r = 0; r < J.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < J.cols(); ++c) row.push_back(num(J(r, c)));
    m.push_back(row);
  }
  return m;
}

inline json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline json to_json(const AreaResult& r) {
  json j = json::object();
  j["area"] = num(r.value);
  j["rule"] = r.rule;
  j["nodes_per_axis"] = r.nodes_per_axis;
  j["points"] = r.points;
  j["integrand_min"] = num(r.integrand_min);
  j["integrand_max"] = num(r.integrand_max);
  j["region_volume"] = num(r.region_volume);
  j["jacobian"] = r.jacobian;
  j["fallback_nodes"] = r.fallback_nodes;
  return j;
}

inline json to_json(const ResidualReport& r) {
  json j = json::object();
  j["kind"] = r.kind;
  j["center"] = to_json(r.center);
  j["radii"] = to_json(r.radii);
  j["values"] = to_json(r.values);
  j["verdict"] = r.verdict;
  return j;
}

inline json to_json(const HolderReport& r) {
  json j = json::object();
  j["center"] = to_json(r.center);
  j["radii"] = to_json(r.radii);
  j["alpha"] = to_json(r.alpha);
  j["upsilon"] = to_json(r.upsilon);
  j["c1"] = num(r.c1);
  j["c2"] = num(r.c2);
  j["verdict"] = r.verdict;
  return j;
}

inline json to_json(const ApproxFamily& f) {
  json j = json::object();
  j["epsilons"] = to_json(f.epsilons());
  j["sup_phi_gap"] = to_json(f.sup_phi_gap());
  j["sup_jac_gap"] = to_json(f.sup_jac_gap());
  j["grid"] = {{"lo", to_json(f.grid_box.lo())}, {"hi", to_json(f.grid_box.hi())}, {"nodes_per_axis", f.grid_nodes},
               {"points", f.nodes.size()}};
  j["group_box"] = {{"lo", to_json(f.group_box.lo())}, {"hi", to_json(f.group_box.hi())}};
  json levels = json::array();
  for (const auto& L : f.levels) {
    json l = json::object();
    l["eps"] = num(L.eps);
    l["ok"] = L.ok;
    l["status"] = L.status;
    l["sup_phi_gap"] = num(L.sup_phi_gap);
    l["sup_jac_gap"] = num(L.sup_jac_gap);
    l["min_det"] = num(L.min_det);
    l["max_residual"] = num(L.max_residual);
    levels.push_back(l);
  }
  j["levels"] = levels;
  return j;
}

inline json to_json(const CoveringEstimate& e) {
  json j = json::object();
  j["family"] = to_string(e.family.kind);
  j["m"] = num(e.family.m);
  j["delta"] = num(e.delta);
  j["value"] = num(e.value);
  j["cover_size"] = e.cover_size;
  j["samples"] = e.samples;
  j["strategy"] = e.strategy;
  return j;
}

/// Writes <dir>/<command>.json and every table next to it.
inline void write_outputs(const std::filesystem::path& dir, const std::string& command, const json& report,
                          const std::map<std::string, Csv>& tables) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / (command + ".json"), std::ios::binary);
    if (!f) throw Error("cannot write report to " + (dir / (command + ".json")).string());
    f << report.dump(2) << "\n";
  }
  for (const auto& [name, t] : tables) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write table " + (dir / name).string());
    f << t.str();
  }
}

}  // namespace hcalc::cli
