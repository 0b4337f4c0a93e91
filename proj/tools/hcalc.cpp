// hcalc: configuration-driven experiments on intrinsic graphs in H^n.
//
//   hcalc <subcommand> --config FILE [--out DIR] [--seed N] [--threads N] [--quiet]
//   hcalc validate --config FILE [--command SUBCOMMAND]

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "hcalc/cli/experiment.hpp"

namespace {

int threads_from_env() {
  const char* v = std::getenv("HCALC_THREADS");
  if (!v) return 0;
  try {
    return std::max(0, std::stoi(v));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hcalc::cli;
  CLI::App app{"Numerical experiments on intrinsic graphs and H-regular surfaces in Heisenberg groups"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);

  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = -1;
  bool quiet = false;

  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    sub->add_option("--config", config, "experiment config (TOML subset)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory for reports")->capture_default_str();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--threads", threads, "worker threads (default: HCALC_THREADS, else 1)");
    sub->add_flag("--quiet", quiet, "suppress the summary line");
  }
  std::string command_override;
  auto* val = app.add_subcommand("validate", "check a config without running numerics");
  val->add_option("--config", config, "experiment config (TOML subset)")->required()->check(CLI::ExistingFile);
  val->add_option("--command", command_override, "check against this subcommand instead of run.command");
  val->add_flag("--quiet", quiet, "print nothing, report through the exit code");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  ConfigDoc doc;
  try {
    doc = load_config(config);
  } catch (const ConfigError& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return 2;
  }

  if (cmd == "validate") {
    const auto diags = validate(doc, command_override);
    if (!quiet)
      for (const auto& d : diags) std::cout << config << ": " << d.str() << "\n";
    return diags.empty() ? 0 : 2;
  }

  hcalc::set_threads(threads >= 0 ? threads : threads_from_env());
  RunOptions ro;
  ro.seed = seed;
  Outcome res;
  try {
    res = run(cmd, doc, ro);
    write_outputs(out_dir, cmd, res.report, res.tables);
  } catch (const std::exception& e) {
    std::cerr << "hcalc: " << e.what() << "\n";
    return 3;
  }
  if (res.exit_code != 0) {
    const auto& err = res.report.contains("error") ? res.report["error"] : json::object();
    if (err.contains("diagnostics"))
      for (const auto& d : err["diagnostics"]) std::cerr << config << ": " << d.get<std::string>() << "\n";
    else if (err.contains("message"))
      std::cerr << "hcalc " << cmd << ": " << err["message"].get<std::string>() << "\n";
    else
      std::cerr << "hcalc " << cmd << ": numerical failure, see " << out_dir << "/" << cmd << ".json\n";
  } else if (!quiet) {
    std::cout << "wrote " << out_dir << "/" << cmd << ".json\n";
  }
  return res.exit_code;
}
