#pragma once

#include <vector>

#include "lmoamp/messages.hpp"
#include "lmoamp/prior.hpp"

namespace lmoamp {

struct DenoiseResult {
  Vector mean;
  double avg_variance = 0.0;
  double xi_b = 0.0;
};

/// Element-wise Bayes-optimal denoising of the sufficient statistic, with the
/// averaged posterior variance and the averaged derivative.
DenoiseResult denoise_posterior(const SufficientStatistic<double>& x_suf, const PriorModel& prior);
DenoiseResult denoise_posterior(const Vector& x_suf_mean, double v_suf, const PriorModel& prior);

/// Posterior covariance row v_post_{B,t'+1,t+1}, t' = 0..t. The pair covariance
/// of nested statistics reduces to the diagonal, so the row is constant.
Vector posterior_cov_row(double avg_variance, const std::vector<double>& v_suf_diagonals);

/// Extrinsic B-to-A message. xi_history holds xi_{B,0..t} and v_post_row, v_suf_row
/// the entries for t' = 0..t; the returned row has length t + 2, its first entry
/// being the covariance with the all-zero initial message.
ExtrinsicMessage extrinsic_b(const Vector& posterior_mean, const SufficientStatistic<double>& x_suf, double xi_b,
                             const std::vector<double>& xi_history, const Vector& v_post_row,
                             const Vector& v_suf_row);

struct ModuleBIterate {
  SufficientStatistic<double> suf;
  double xi_b = 0.0;
  Vector posterior_mean;
  Vector posterior_cov_row;
  ExtrinsicMessage extrinsic;
};

/// One long-memory module-B update. v_suf_diagonals lists the combined
/// variances of earlier A-to-B statistics (for the monotonicity precondition).
ModuleBIterate module_b_step(const MessageHistory& from_a, const MessageHistory& to_a, const PriorModel& prior,
                             const std::vector<double>& v_suf_diagonals);

}  // namespace lmoamp
