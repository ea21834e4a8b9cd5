#include "lmoamp/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmoamp/errors.hpp"
#include "lmoamp/module_a.hpp"
#include "lmoamp/module_b.hpp"

namespace lmoamp {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::LmOamp: return "lm_oamp";
    case Algorithm::Oamp: return "oamp";
    case Algorithm::Amp: return "amp";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "lm_oamp") return Algorithm::LmOamp;
  if (name == "oamp") return Algorithm::Oamp;
  if (name == "amp") return Algorithm::Amp;
  throw ConfigError("unknown algorithm '" + name + "' (expected lm_oamp, oamp or amp)");
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (!(stop_tol >= 0.0)) throw ConfigError("solver.stop_tol must be >= 0");
  if (window && *window < 1) throw ConfigError("solver.window must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

void fill_error_stats(IterationRecord& rec, const Vector& estimate, const Vector& truth) {
  const Eigen::ArrayXd sq = (estimate - truth).array().square();
  rec.mse = sq.mean();
  const double n = double(sq.size());
  rec.mse_stderr = n > 1 ? std::sqrt((sq - rec.mse).square().sum() / (n - 1.0) / n) : 0.0;
}

bool should_stop(const std::vector<IterationRecord>& recs, double tol) {
  if (recs.size() < 2 || tol <= 0.0) return false;
  return std::abs(recs.back().v_post_b - recs[recs.size() - 2].v_post_b) < tol;
}

void guard_prior(const PriorModel& prior, const SolverConfig& cfg) {
  if (cfg.nonlinearity_guard && prior.is_linear()) {
    throw PreconditionError("the Bayes-optimal denoiser of " + prior.describe() +
                            " is affine; long-memory covariances become singular (disable nonlinearity_guard to run)");
  }
}

template <typename Body>
void run_guarded(RunTrajectory& traj, int t, Body&& body) {
  try {
    body();
  } catch (const DegenerateError& e) {
    traj.partial = true;
    traj.error = e.what();
    traj.error_iteration = t;
  } catch (const SingularCovarianceError& e) {
    traj.partial = true;
    traj.error = e.what();
    traj.error_iteration = t;
  }
}

}  // namespace

RunTrajectory run_lm_oamp(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                          const SolverConfig& cfg) {
  cfg.validate();
  guard_prior(prior, cfg);
  const Index N = instance.N();
  RunTrajectory traj;
  traj.algorithm = Algorithm::LmOamp;

  MessageHistory to_a(cfg.window);
  MessageHistory to_b(cfg.window);
  to_a.push(Vector::Zero(N), Vector::Constant(1, prior.variance()), 0.0);
  std::vector<double> suf_ab_diagonals;
  double prev_suf_ba = std::numeric_limits<double>::infinity();

  for (int t = 0; t < cfg.max_iters; ++t) {
    bool ok = false;
    run_guarded(traj, t, [&] {
      const auto start = Clock::now();
      ModuleAIterate a = module_a_step(to_a, to_b, instance.y, spec, instance.sigma2);
      if (a.suf.variance > prev_suf_ba * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "iteration " << t << ": v_suf_BA grew from " << prev_suf_ba << " to " << a.suf.variance;
        traj.warnings.push_back(os.str());
      }
      prev_suf_ba = a.suf.variance;
      to_b.push(a.extrinsic.mean, a.extrinsic.cov_row, a.xi_a, a.g_values);

      ModuleBIterate b = module_b_step(to_b, to_a, prior, suf_ab_diagonals);
      suf_ab_diagonals.push_back(b.suf.variance);
      if (cfg.window && Index(suf_ab_diagonals.size()) >= *cfg.window) {
        suf_ab_diagonals.erase(suf_ab_diagonals.begin(), suf_ab_diagonals.end() - (*cfg.window - 1));
      }
      to_a.push(b.extrinsic.mean, b.extrinsic.cov_row, b.xi_b);

      IterationRecord rec;
      rec.iteration = t;
      rec.v_suf_ba = a.suf.variance;
      rec.v_suf_ab = b.suf.variance;
      rec.v_post_a = a.posterior_cov_row[a.posterior_cov_row.size() - 1];
      rec.v_post_b = b.posterior_cov_row[b.posterior_cov_row.size() - 1];
      rec.xi_a = a.xi_a;
      rec.xi_b = b.xi_b;
      rec.jitter_ba = a.suf.weights.jitter;
      rec.jitter_ab = b.suf.weights.jitter;
      rec.fallback_ba = a.suf.weights.latest_only;
      rec.fallback_ab = b.suf.weights.latest_only;
      if (rec.fallback_ba || rec.fallback_ab) {
        traj.warnings.push_back("iteration " + std::to_string(t) +
                                ": message covariance indefinite with degenerate structure; used the latest message");
      }
      rec.v_post_a_row = a.posterior_cov_row;
      rec.v_post_b_row = b.posterior_cov_row;
      fill_error_stats(rec, b.posterior_mean, instance.x_true);
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      traj.records.push_back(std::move(rec));
      if (cfg.keep_iterates) {
        traj.estimates.push_back(b.posterior_mean);
        traj.extrinsic.push_back(b.extrinsic.mean);
      }
      ok = true;
    });
    if (!ok || should_stop(traj.records, cfg.stop_tol)) break;
  }
  return traj;
}

RunTrajectory run_oamp(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                       const SolverConfig& cfg) {
  cfg.validate();
  guard_prior(prior, cfg);
  const Index N = instance.N();
  RunTrajectory traj;
  traj.algorithm = Algorithm::Oamp;

  Vector x_ba = Vector::Zero(N);
  double v_ba = prior.variance();

  auto harmonic = [](double post, double prior_var, long t) {
    const double inv = 1.0 / post - 1.0 / prior_var;
    if (!(inv > 0.0) || !std::isfinite(inv)) {
      throw DegenerateError("extrinsic variance is not positive (harmonic difference <= 0)", t);
    }
    return 1.0 / inv;
  };

  for (int t = 0; t < cfg.max_iters; ++t) {
    bool ok = false;
    run_guarded(traj, t, [&] {
      const auto start = Clock::now();
      SufficientStatistic<double> in_a{x_ba, v_ba, {Vector::Ones(1), v_ba, 0.0}};
      LmmseResult lm = lmmse_apply(instance.y, in_a, spec, instance.sigma2);
      const double xi_a = xi_from_gains(lm.g_values);
      check_onsager_divisor(xi_a, "module A");
      const double v_post_a = posterior_cov_entry(lm.g_values, lm.g_values, v_ba, instance.sigma2, spec.eigenvalues);
      const double v_ab = harmonic(v_post_a, v_ba, t);
      const Vector x_ab = onsager_mean(lm.posterior_mean, x_ba, xi_a);

      DenoiseResult d = denoise_posterior(x_ab, v_ab, prior);
      check_onsager_divisor(d.xi_b, "module B");
      const double v_next = harmonic(d.avg_variance, v_ab, t);
      Vector x_next = onsager_mean(d.mean, x_ab, d.xi_b);

      IterationRecord rec;
      rec.iteration = t;
      rec.v_suf_ba = v_ba;
      rec.v_suf_ab = v_ab;
      rec.v_post_a = v_post_a;
      rec.v_post_b = d.avg_variance;
      rec.xi_a = xi_a;
      rec.xi_b = d.xi_b;
      rec.v_post_a_row = Vector::Constant(1, v_post_a);
      rec.v_post_b_row = Vector::Constant(1, d.avg_variance);
      fill_error_stats(rec, d.mean, instance.x_true);
      rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
      traj.records.push_back(std::move(rec));
      if (cfg.keep_iterates) {
        traj.estimates.push_back(d.mean);
        traj.extrinsic.push_back(x_next);
      }
      x_ba = std::move(x_next);
      v_ba = v_next;
      ok = true;
    });
    if (!ok || should_stop(traj.records, cfg.stop_tol)) break;
  }
  return traj;
}

RunTrajectory run_amp(const ProblemInstance& instance, const PriorModel& prior, const SolverConfig& cfg) {
  cfg.validate();
  const Index N = instance.N();
  const Index M = instance.M();
  const double delta = instance.delta();
  RunTrajectory traj;
  traj.algorithm = Algorithm::Amp;

  Vector x = Vector::Zero(N);
  Vector z = Vector::Zero(M);
  double onsager = 0.0;
  constexpr double kBlowup = 1e100;

  for (int t = 0; t < cfg.max_iters; ++t) {
    const auto start = Clock::now();
    z = instance.y - instance.A * x + onsager * z;
    const double tau2 = z.squaredNorm() / double(M);
    if (!std::isfinite(tau2) || tau2 > kBlowup || !(tau2 > 0.0)) {
      traj.diverged = true;
      traj.error = "AMP effective noise variance left the finite positive range";
      traj.error_iteration = t;
      break;
    }
    const Vector r = x + instance.A.transpose() * z;
    if (!r.allFinite()) {
      traj.diverged = true;
      traj.error = "AMP pseudo-data became non-finite";
      traj.error_iteration = t;
      break;
    }
    DenoiseResult d = denoise_posterior(r, tau2, prior);
    onsager = d.xi_b / delta;
    x = std::move(d.mean);

    IterationRecord rec;
    rec.iteration = t;
    rec.v_suf_ab = tau2;
    rec.v_post_b = d.avg_variance;
    rec.xi_b = d.xi_b;
    rec.v_post_b_row = Vector::Constant(1, d.avg_variance);
    fill_error_stats(rec, x, instance.x_true);
    rec.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    const bool blown = !std::isfinite(rec.mse) || rec.mse > kBlowup;
    traj.records.push_back(std::move(rec));
    if (cfg.keep_iterates) traj.estimates.push_back(x);
    if (blown) {
      traj.diverged = true;
      traj.error = "AMP mean-square error overflowed";
      traj.error_iteration = t;
      break;
    }
    if (should_stop(traj.records, cfg.stop_tol)) break;
  }
  return traj;
}

RunTrajectory run_solver(const ProblemInstance& instance, const SpectralView& spec, const PriorModel& prior,
                         const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::LmOamp: return run_lm_oamp(instance, spec, prior, cfg);
    case Algorithm::Oamp: return run_oamp(instance, spec, prior, cfg);
    case Algorithm::Amp: return run_amp(instance, prior, cfg);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace lmoamp
