#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lmoamp/errors.hpp"
#include "lmoamp/experiment.hpp"

namespace fs = std::filesystem;
using namespace lmoamp;

int main(int argc, char** argv) {
  CLI::App app{"Long-memory OAMP experiments: solvers, state evolution and Monte Carlo certification"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  int workers = 1;
  bool verbose = false;

  for (const char* name : {"run", "se", "compare", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides outputs.dir and LMOAMP_OUT_DIR)");
    sub->add_option("--workers", workers, "concurrent trials")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }
  app.get_subcommand("run")->description("solver trials with Monte Carlo aggregation against state evolution");
  app.get_subcommand("se")->description("both state-evolution engines and the equivalence report");
  app.get_subcommand("compare")->description("LM-OAMP vs OAMP (and AMP) against state evolution on shared instances");
  app.get_subcommand("sweep")->description("Cartesian product over up to two list-valued fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::optional<fs::path> cli_out = out.empty() ? std::nullopt : std::optional<fs::path>(out);
  CommandOptions opts;
  opts.workers = workers;
  opts.verbose = verbose;
  opts.log = &std::cerr;

  try {
    if (command == "sweep") {
      const Json raw = load_json_file(config_path);
      std::optional<fs::path> cfg_out;
      if (raw.contains("outputs") && raw["outputs"].is_object() && raw["outputs"].contains("dir")) {
        const auto& d = raw["outputs"]["dir"];
        if (!d.is_string()) throw ConfigError("outputs.dir must be a string");
        cfg_out = fs::path(d.get<std::string>());
      }
      ExperimentConfig shell;
      shell.out_dir = cfg_out;
      shell.base_dir = fs::path(config_path).parent_path();
      opts.out_dir = resolve_out_dir(cli_out, shell);
      return cmd_sweep(raw, shell.base_dir, opts);
    }
    const ExperimentConfig cfg = load_config(config_path);
    opts.out_dir = resolve_out_dir(cli_out, cfg);
    int code = kExitOk;
    if (command == "run") {
      code = cmd_run(cfg, opts);
    } else if (command == "se") {
      code = cmd_se(cfg, opts);
    } else {
      code = cmd_compare(cfg, opts);
    }
    if (verbose) std::cerr << "outputs in " << opts.out_dir.string() << "\n";
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const SingularCovarianceError& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
