#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hcalc/cli/experiment.hpp"
#include "oracles.hpp"

using namespace hcalc::cli;
namespace fs = std::filesystem;

namespace {

const std::string kExe = HCALC_EXE;
const std::string kFixtures = HCALC_FIXTURES;
const std::string kConfigs = HCALC_CONFIGS;

std::string graph_config(int n, int k, const std::string& comps, const std::string& lo, const std::string& hi,
                         const std::string& extra = "") {
  return "[splitting]\nn = " + std::to_string(n) + "\nk = " + std::to_string(k) +
         "\n\n[surface]\nkind = \"graph\"\ncomponents = " + comps + "\n\n[domain]\nlo = " + lo + "\nhi = " + hi +
         "\n\n" + extra;
}

std::string joined(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) s += d.str() + "\n";
  return s;
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("hcalc_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Run, AreaOfFlatGraph) {
  const auto doc = parse_config(graph_config(1, 1, "[\"0\"]", "[0.0, 0.0]", "[1.0, 1.0]"));
  const auto out = run("area", doc);
  ASSERT_EQ(out.exit_code, 0) << out.report.dump(2);
  EXPECT_NEAR(out.report["results"]["area"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(out.report["status"], "ok");
}

TEST(Run, JacobianOfEta) {
  const auto doc = parse_config(graph_config(1, 1, "[\"eta1\"]", "[0.0, 0.0]", "[1.0, 1.0]",
                                             "[jacobian]\npoint = [0.5, 0.5]\n"));
  const auto out = run("jacobian", doc);
  ASSERT_EQ(out.exit_code, 0) << out.report.dump(2);
  const auto& M = out.report["results"]["matrix"];
  ASSERT_EQ(M.size(), 1u);
  ASSERT_EQ(M[0].size(), 1u);
  EXPECT_NEAR(M[0][0].get<double>(), 1.0, 1e-6);
  ASSERT_TRUE(out.tables.count("jacobian.csv"));
  EXPECT_EQ(out.tables.at("jacobian.csv").header, (std::vector<std::string>{"m0", "m1", "J0_0"}));
}

TEST(Run, JacobianMatchesOracle) {
  const std::string phi = "0.5*eta1 + 0.2*v2*w2 + 0.1*tau*eta1";
  const auto doc = parse_config(graph_config(2, 1, "[\"" + phi + "\"]", "[-1.0, -1.0, -1.0, -1.0]",
                                             "[1.0, 1.0, 1.0, 1.0]", "[jacobian]\npoint = [0.1, 0.2, -0.3, 0.4]\n"));
  const auto out = run("jacobian", doc);
  ASSERT_EQ(out.exit_code, 0) << out.report.dump(2);
  const hcalc::Splitting s(2, 1);
  const hcalc::GraphFunction g(s, {hcalc::ScalarField::parse(phi, s.base_vars())},
                               hcalc::Box({-1, -1, -1, -1}, {1, 1, 1, 1}));
  const auto J = oracle::jacobian_fd(g, {0.1, 0.2, -0.3, 0.4});
  const auto& M = out.report["results"]["matrix"];
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(M[0][c].get<double>(), J(0, c), 1e-6) << c;
}

TEST(Run, DistInf) {
  const auto doc = parse_config("[dist]\nmetric = \"dinf\"\np = [1.0, 0.0, 0.0]\n");
  const auto out = run("dist", doc);
  ASSERT_EQ(out.exit_code, 0) << out.report.dump(2);
  EXPECT_DOUBLE_EQ(out.report["results"]["distance"].get<double>(), 1.0);
  EXPECT_EQ(out.report["config"]["dist"]["q"], json::array({0.0, 0.0, 0.0}));
}

TEST(Run, ReportEmbedsResolvedConfigAndVersion) {
  const auto doc = parse_config(graph_config(1, 1, "[\"eta1\"]", "[0.0, 0.0]", "[1.0, 1.0]"));
  const auto out = run("area", doc);
  ASSERT_EQ(out.exit_code, 0);
  EXPECT_EQ(out.report["version"], kVersion);
  EXPECT_EQ(out.report["command"], "area");
  const auto& cfg = out.report["config"];
  EXPECT_EQ(cfg["run"]["command"], "area");
  EXPECT_EQ(cfg["splitting"]["n"], 1);
  EXPECT_EQ(cfg["area"]["simpson_nodes"], 33);
  EXPECT_EQ(cfg["area"]["method"], "curve");
  EXPECT_EQ(cfg["surface"]["kind"], "graph");
}

TEST(Run, ConfigErrorExitsTwo) {
  const auto doc = parse_config(graph_config(1, 2, "[\"0\", \"0\"]", "[0.0, 0.0]", "[1.0, 1.0]"));
  const auto out = run("area", doc);
  EXPECT_EQ(out.exit_code, 2);
  EXPECT_EQ(out.report["status"], "error");
  EXPECT_EQ(out.report["error"]["kind"], "config");
  EXPECT_TRUE(out.tables.empty());
}

TEST(Run, NumericalFailureExitsThree) {
  // X f vanishes identically, so no horizontal direction solves f = 0.
  const auto doc = parse_config(
      "[splitting]\nn = 1\nk = 1\n[surface]\nkind = \"levelset\"\ncomponents = [\"t - 1\"]\n"
      "[domain]\nlo = [-1.0, -1.0]\nhi = [1.0, 1.0]\n[jacobian]\npoint = [0.0, 0.0]\n");
  const auto out = run("jacobian", doc);
  EXPECT_EQ(out.exit_code, 3) << out.report.dump(2);
  EXPECT_EQ(out.report["status"], "error");
  EXPECT_EQ(out.report["error"]["kind"], "numerical");
  EXPECT_TRUE(out.tables.empty());
}

TEST(Run, SeedOverrideIsRecorded) {
  const auto doc = parse_config(graph_config(1, 1, "[\"eta1\"]", "[-1.0, -1.0]", "[1.0, 1.0]",
                                             "[uid]\nradii = [0.2, 0.1]\nprobes = 16\n"));
  RunOptions ro;
  ro.seed = 99;
  const auto out = run("uid-check", doc, ro);
  ASSERT_EQ(out.exit_code, 0) << out.report.dump(2);
  EXPECT_EQ(out.report["config"]["run"]["seed"], 99);
  EXPECT_EQ(out.report["config"]["uid"]["seed"], 99);
}

TEST(Run, Deterministic) {
  const auto doc = load_config(kConfigs + "/uid-check.toml");
  const auto a = run("uid-check", doc), b = run("uid-check", doc);
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  EXPECT_EQ(a.tables.at("uid-check.csv").str(), b.tables.at("uid-check.csv").str());
}

TEST(Validate, WellFormedIsClean) {
  EXPECT_TRUE(validate(load_config(kFixtures + "/valid_area.toml")).empty());
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    const auto diags = validate(load_config(e.path().string()));
    EXPECT_TRUE(diags.empty()) << e.path() << "\n" << joined(diags);
  }
}

TEST(Validate, GraphVariableNamed) {
  const auto diags = validate(load_config(kFixtures + "/bad_graph_var.toml"));
  ASSERT_FALSE(diags.empty());
  const auto s = joined(diags);
  EXPECT_NE(s.find("'x1'"), std::string::npos) << s;
  EXPECT_EQ(diags[0].line, 11);
}

TEST(Validate, KGreaterThanN) {
  const auto s = joined(validate(load_config(kFixtures + "/bad_k_gt_n.toml")));
  EXPECT_NE(s.find("1 <= k <= n"), std::string::npos) << s;
}

TEST(Validate, DegenerateBox) {
  const auto s = joined(validate(load_config(kFixtures + "/bad_degenerate_box.toml")));
  EXPECT_NE(s.find("degenerate box"), std::string::npos) << s;
}

TEST(Validate, SchemaErrors) {
  auto base = graph_config(1, 1, "[\"eta1\"]", "[0.0, 0.0]", "[1.0, 1.0]");
  auto has = [](const std::string& text, const std::string& needle, const std::string& cmd = "area") {
    const auto s = joined(validate(parse_config(text), cmd));
    EXPECT_NE(s.find(needle), std::string::npos) << "looking for '" << needle << "' in\n" << s;
  };
  has(base + "[area]\nsimpson_nodes = 4\n", "simpson_nodes");
  has(base + "[area]\nbogus = 1\n", "bogus");
  has(base + "[nosuch]\nx = 1\n", "unknown section");
  has(base + "[area]\nsimpson_nodes = \"many\"\n", "an integer");
  has(base + "[jacobian]\npoint = [2.0, 0.0]\n", "outside the domain", "jacobian");
  has(base, "unknown subcommand", "plot");
  has(graph_config(1, 1, "[\"eta1 +\"]", "[0.0, 0.0]", "[1.0, 1.0]"), "components[0]");
  has(graph_config(1, 1, "[\"eta1\", \"tau\"]", "[0.0, 0.0]", "[1.0, 1.0]"), "expected k = 1");
  has(graph_config(1, 1, "[\"eta1\"]", "[0.0, 0.0, 0.0]", "[1.0, 1.0, 1.0]"), "domain.lo");
  has(base + "[measure]\nset = \"box\"\nlo = [0.0, 0.0, 0.0]\nhi = [1.0, 1.0, -1.0]\nm = 4\n", "lo <= hi", "measure");
  has(base + "[measure]\nfamilies = [\"packing\"]\n", "unknown family", "measure");
  has(base + "[approx]\nepsilons = [0.1, 0.2]\n", "epsilons", "approx");
}

TEST(Validate, DiagnosticCarriesLine) {
  const auto diags =
      validate(parse_config(graph_config(1, 1, "[\"eta1\"]", "[0.0, 0.0]", "[1.0, 1.0]", "[area]\nbogus = 1\n")));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].line, 14);
  EXPECT_EQ(diags[0].str().rfind("line 14: ", 0), 0u) << diags[0].str();
}

TEST(Executable, ExitCodesAndOutputs) {
  const auto dir = scratch("exit");
  const std::string q = " --quiet > /dev/null 2>&1";
  EXPECT_EQ(shell(kExe + " validate --config " + kFixtures + "/valid_area.toml" + q), 0);
  EXPECT_EQ(shell(kExe + " validate --config " + kFixtures + "/bad_k_gt_n.toml" + q), 2);
  EXPECT_EQ(shell(kExe + " area --config " + kFixtures + "/bad_graph_var.toml --out " + dir.string() + q), 2);
  EXPECT_EQ(shell(kExe + " area --config /nonexistent.toml" + q), 2);
  EXPECT_EQ(shell(kExe + " frobnicate" + q), 2);
  EXPECT_EQ(shell(kExe + " area --config " + kFixtures + "/valid_area.toml --out " + dir.string() + q), 0);
  const auto rep = json::parse(slurp(dir / "area.json"));
  EXPECT_NEAR(rep["results"]["area"].get<double>(), 1.0, 1e-12);
}

TEST(Executable, ByteIdenticalReports) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = kConfigs + "/holder.toml";
  ASSERT_EQ(shell("HCALC_THREADS=1 " + kExe + " holder --config " + cfg + " --out " + a.string() + " --quiet"), 0);
  ASSERT_EQ(shell(kExe + " holder --threads 2 --config " + cfg + " --out " + b.string() + " --quiet"), 0);
  EXPECT_EQ(slurp(a / "holder.json"), slurp(b / "holder.json"));
  EXPECT_EQ(slurp(a / "holder.csv"), slurp(b / "holder.csv"));
  EXPECT_FALSE(slurp(a / "holder.json").empty());
}
