#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lmoamp/prior.hpp"
#include "lmoamp/sensing.hpp"

namespace lmoamp {

enum class Algorithm { LmOamp, Oamp, Amp };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct SolverConfig {
  Algorithm algorithm = Algorithm::LmOamp;
  int max_iters = 50;
  double stop_tol = 1e-10;  // on |v_post_B(t) - v_post_B(t-1)|; 0 disables early stopping
  std::optional<Index> window;  // cap on the long-memory history; unbounded by default
  std::uint64_t seed = 0;
  bool nonlinearity_guard = true;  // reject priors whose denoiser is affine
  bool keep_iterates = false;      // store per-iteration estimates in the trajectory

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double v_suf_ba = 0.0;  // noise variance of the statistic entering module A
  double v_suf_ab = 0.0;  // noise variance of the statistic entering module B
  double v_post_a = 0.0;
  double v_post_b = 0.0;
  double xi_a = 0.0;
  double xi_b = 0.0;
  double mse = 0.0;         // (1/N) ||x_post_B - x||^2
  double mse_stderr = 0.0;  // sample std of the squared errors / sqrt(N)
  double jitter_ba = 0.0;
  double jitter_ab = 0.0;
  bool fallback_ba = false;  // combiner fell back to the latest message (see solve_weights_structured)
  bool fallback_ab = false;
  Vector v_post_a_row;
  Vector v_post_b_row;
  double wall_time = 0.0;  // seconds; diagnostics only, never exported
};

struct RunTrajectory {
  Algorithm algorithm = Algorithm::LmOamp;
  std::vector<IterationRecord> records;
  bool diverged = false;  // AMP baseline only
  bool partial = false;   // stopped by a degeneracy error
  std::string error;
  long error_iteration = -1;
  std::vector<std::string> warnings;
  std::vector<Vector> estimates;  // x_post_B per iteration when keep_iterates
  std::vector<Vector> extrinsic;  // x_B->A per iteration when keep_iterates
};

RunTrajectory run_lm_oamp(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                          const SolverConfig& cfg);
RunTrajectory run_oamp(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                       const SolverConfig& cfg);
RunTrajectory run_amp(const ProblemInstance& instance, const PriorModel& prior, const SolverConfig& cfg);

/// Dispatches on cfg.algorithm.
RunTrajectory run_solver(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                         const SolverConfig& cfg);

}  // namespace lmoamp
