#include "lmoamp/module_b.hpp"

namespace lmoamp {

DenoiseResult denoise_posterior(const Vector& x_suf_mean, double v_suf, const PriorModel& prior) {
  DenoiseResult out;
  out.mean.resize(x_suf_mean.size());
  double var_sum = 0.0;
  double deriv_sum = 0.0;
  for (Index n = 0; n < x_suf_mean.size(); ++n) {
    const DenoiserEval e = denoise(x_suf_mean[n], v_suf, prior);
    out.mean[n] = e.mean;
    var_sum += e.variance;
    deriv_sum += e.derivative;
  }
  const double count = double(x_suf_mean.size());
  out.avg_variance = var_sum / count;
  out.xi_b = deriv_sum / count;
  return out;
}

DenoiseResult denoise_posterior(const SufficientStatistic<double>& x_suf, const PriorModel& prior) {
  return denoise_posterior(x_suf.mean, x_suf.variance, prior);
}

Vector posterior_cov_row(double avg_variance, const std::vector<double>& v_suf_diagonals) {
  return Vector::Constant(Index(v_suf_diagonals.size()), avg_variance);
}

ExtrinsicMessage extrinsic_b(const Vector& posterior_mean, const SufficientStatistic<double>& x_suf, double xi_b,
                             const std::vector<double>& xi_history, const Vector& v_post_row,
                             const Vector& v_suf_row) {
  check_onsager_divisor(xi_b, "module B");
  const Index n = v_post_row.size();
  if (n < 1) throw DimensionError("extrinsic_b: empty covariance rows");
  const Vector tail = extrinsic_cov_row(v_post_row, xi_history, xi_b, v_suf_row);
  ExtrinsicMessage out;
  out.mean = onsager_mean(posterior_mean, x_suf.mean, xi_b);
  out.cov_row.resize(n + 1);
  out.cov_row[0] = v_post_row[n - 1] / (1.0 - xi_b);
  out.cov_row.tail(n) = tail;
  return out;
}

ModuleBIterate module_b_step(const MessageHistory& from_a, const MessageHistory& to_a, const PriorModel& prior,
                             const std::vector<double>& v_suf_diagonals) {
  ModuleBIterate it;
  it.suf = from_a.combine();
  DenoiseResult d = denoise_posterior(it.suf, prior);
  it.posterior_mean = std::move(d.mean);
  it.xi_b = d.xi_b;
  check_onsager_divisor(it.xi_b, "module B");

  std::vector<double> diagonals = v_suf_diagonals;
  diagonals.push_back(it.suf.variance);

  // Covariances with the stored B-to-A messages. The initial all-zero message
  // carries producer xi = 0, which turns the general entry into
  // v_post / (1 - xi_b); later messages carry the xi of their B update.
  const Index k = to_a.size();
  const Vector post = posterior_cov_row(d.avg_variance, diagonals);
  it.posterior_cov_row = post;
  Vector post_row = Vector::Constant(k + 1, d.avg_variance);
  std::vector<double> xi_history = to_a.producer_xi();
  xi_history.push_back(it.xi_b);
  const Vector v_suf_row = Vector::Constant(k + 1, it.suf.variance);
  it.extrinsic.mean = onsager_mean(it.posterior_mean, it.suf.mean, it.xi_b);
  it.extrinsic.cov_row = extrinsic_cov_row(post_row, xi_history, it.xi_b, v_suf_row);
  return it;
}

}  // namespace lmoamp
