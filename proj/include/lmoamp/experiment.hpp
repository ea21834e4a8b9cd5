#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmoamp/solvers.hpp"
#include "lmoamp/state_evolution.hpp"
#include "lmoamp/trajectory_io.hpp"

namespace lmoamp {

enum class Ensemble { Iid, Cond };

struct ExperimentConfig {
  Index N = 0;
  double delta = 1.0;
  PriorModel prior = PriorModel::gaussian();
  std::optional<double> sigma2;
  std::optional<double> snr_db;
  Ensemble ensemble = Ensemble::Cond;
  double kappa = 1.0;
  std::optional<std::filesystem::path> spectrum_path;
  SolverConfig solver;
  int trials = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out_dir;
  bool write_csv = true;
  bool write_json = true;
  std::string sweep_command = "se";
  std::filesystem::path base_dir;  // relative paths in the config resolve against this

  Index M() const;
  double noise_variance() const;
  /// Config with every default filled in, as recorded in output headers.
  Json resolved() const;
};

/// Strict parse: unknown keys, wrong types and list values are ConfigErrors.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
Json load_json_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Limiting-spectrum stand-in for the SE engines: the loaded spectrum if one
/// is configured, the deterministic profile for the conditioned ensemble, or
/// the realized spectrum of the seed matrix for the i.i.d. ensemble.
SpectrumInput config_spectrum(const ExperimentConfig& cfg);

struct TrialInstance {
  ProblemInstance instance;
  SpectralView spectrum;  // empty when only AMP consumes the instance
};

/// Trial k draws matrix, signal and noise from seed + k.
TrialInstance generate_trial(const ExperimentConfig& cfg, int k, bool need_spectrum = true);

/// Per-iteration Monte Carlo statistics across trials.
struct McSummary {
  std::vector<int> trials;                  // trials that reached iteration t
  std::vector<double> mean;
  std::vector<std::optional<double>> std_error;  // absent with fewer than 2 trials
  std::vector<std::optional<double>> se_pred;
  std::vector<std::optional<double>> z;

  std::size_t size() const { return mean.size(); }
  /// Fraction of iterations with |z| <= bound among those with a z-score.
  std::optional<double> fraction_within(double bound) const;
};

McSummary summarize(const std::vector<RunTrajectory>& runs, const std::vector<double>& se_pred);

struct SEPair {
  std::optional<SETrajectory> lm;
  std::optional<SETrajectory> oamp;
  std::optional<EquivalenceReport> report;
  std::string error;
  int exit_code = 0;
};

SEPair run_se_pair(const ExperimentConfig& cfg);

struct CompareResult {
  SEPair se;
  std::vector<RunTrajectory> lm;
  std::vector<RunTrajectory> oamp;
  std::vector<RunTrajectory> amp;  // only when the configured algorithm is AMP
  McSummary lm_summary;
  McSummary oamp_summary;
  McSummary amp_summary;
  std::vector<double> rel_gap;  // |LM - OAMP| / OAMP of the MC means
  bool amp_divergence_event = false;
};

struct CommandOptions {
  std::filesystem::path out_dir;
  int workers = 1;
  bool verbose = false;
  std::ostream* log = nullptr;
};

/// --out, then outputs.dir, then LMOAMP_OUT_DIR, then "lmoamp_out".
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& cli_out,
                                      const ExperimentConfig& cfg);

/// Runs fn(k) for k in [0, count) on up to `workers` threads; the first
/// exception by index is rethrown after all workers finish.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

CompareResult compare_experiment(const ExperimentConfig& cfg, int workers);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;

int cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_se(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opts);
/// Takes the raw JSON since list-valued fields are only legal here.
int cmd_sweep(const Json& raw, const std::filesystem::path& base_dir, const CommandOptions& opts);

}  // namespace lmoamp
