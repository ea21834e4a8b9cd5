#include "lmoamp/module_a.hpp"

#include <cmath>

namespace lmoamp {

Vector lmmse_gains(const Vector& eigenvalues, double v, double sigma2) {
  Vector g(eigenvalues.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double lambda = eigenvalues[i];
    g[i] = lambda == 0.0 ? 0.0 : v * lambda / (sigma2 + v * lambda);
  }
  return g;
}

LmmseResult lmmse_apply(const Vector& y, const SufficientStatistic<double>& x_suf, const SpectralView& spec,
                        double sigma2) {
  if (y.size() != spec.rows() || x_suf.mean.size() != spec.cols()) {
    throw DimensionError("lmmse_apply: y, x_suf and A disagree in size");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("lmmse_apply: sigma2 must be finite and >= 0");
  const double v = x_suf.variance;
  if (!(v > 0.0)) throw DomainError("lmmse_apply: sufficient-statistic variance must be positive");

  const Vector& s = spec.singular_values;
  Vector h(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (sigma2 == 0.0 && s[i] == 0.0) throw DomainError("lmmse_apply: noiseless LMMSE filter is singular");
    h[i] = v * s[i] / (sigma2 + v * s[i] * s[i]);
  }
  const Vector residual = y - spec.apply(x_suf.mean);
  const Vector coeff = h.cwiseProduct(spec.left_basis.transpose() * residual);
  LmmseResult out;
  out.posterior_mean = x_suf.mean + spec.right_basis * coeff;
  out.g_values = lmmse_gains(spec.eigenvalues, v, sigma2);
  return out;
}

double posterior_cov_entry(const Vector& g_old, const Vector& g_new, double v_suf, double sigma2,
                           const Vector& eigenvalues) {
  if (g_old.size() != eigenvalues.size()) throw DimensionError("posterior_cov_entry: gains and spectrum differ");
  const double gamma = gamma_pair(g_old, g_new);
  double trace = 0.0;
  if (sigma2 > 0.0) {
    for (Index i = 0; i < eigenvalues.size(); ++i) {
      const double lambda = eigenvalues[i];
      const double num = g_old[i] * g_new[i];
      if (num == 0.0) continue;
      if (lambda <= 1e-300) throw InvariantError("posterior_cov_entry: nonzero gain on a zero eigenvalue");
      trace += num / lambda;
    }
    trace /= double(eigenvalues.size());
  }
  return gamma * v_suf + sigma2 * trace;
}

ExtrinsicMessage extrinsic_a(const Vector& x_post, const SufficientStatistic<double>& x_suf, double xi_a,
                             const Vector& posterior_cov_row, const std::vector<double>& xi_history,
                             const Vector& v_suf_row) {
  check_onsager_divisor(xi_a, "module A");
  return {onsager_mean(x_post, x_suf.mean, xi_a), extrinsic_cov_row(posterior_cov_row, xi_history, xi_a, v_suf_row)};
}

ModuleAIterate module_a_step(const MessageHistory& from_b, const MessageHistory& to_b, const Vector& y,
                             const SpectralView& spec, double sigma2) {
  ModuleAIterate it;
  it.suf = from_b.combine();
  LmmseResult lm = lmmse_apply(y, it.suf, spec, sigma2);
  it.posterior_mean = std::move(lm.posterior_mean);
  it.g_values = std::move(lm.g_values);
  it.xi_a = xi_from_gains(it.g_values);

  const Index k = to_b.size();
  it.posterior_cov_row.resize(k + 1);
  for (Index j = 0; j < k; ++j) {
    it.posterior_cov_row[j] =
        posterior_cov_entry(to_b.gains()[std::size_t(j)], it.g_values, it.suf.variance, sigma2, spec.eigenvalues);
  }
  it.posterior_cov_row[k] = posterior_cov_entry(it.g_values, it.g_values, it.suf.variance, sigma2, spec.eigenvalues);

  std::vector<double> xi_history = to_b.producer_xi();
  xi_history.push_back(it.xi_a);
  const Vector v_suf_row = Vector::Constant(k + 1, it.suf.variance);
  it.extrinsic = extrinsic_a(it.posterior_mean, it.suf, it.xi_a, it.posterior_cov_row, xi_history, v_suf_row);
  return it;
}

}  // namespace lmoamp
