#pragma once

#include <vector>

#include "lmoamp/messages.hpp"
#include "lmoamp/sensing.hpp"
#include "lmoamp/types.hpp"

namespace lmoamp {

/// g(lambda_i) = v lambda_i / (sigma2 + v lambda_i): eigenvalues of W^T A for the
/// LMMSE filter at prior variance v. Zero eigenvalues map to zero.
Vector lmmse_gains(const Vector& eigenvalues, double v, double sigma2);

struct LmmseResult {
  Vector posterior_mean;
  Vector g_values;
};

/// x_suf + W^T (y - A x_suf) for W = v (sigma2 I + v A A^T)^{-1} A, v = x_suf.variance,
/// evaluated in the singular basis of A.
LmmseResult lmmse_apply(const Vector& y, const SufficientStatistic<double>& x_suf, const SpectralView& spec,
                        double sigma2);

/// (1/N) tr{(I - W_old^T A)^T (I - W_new^T A)} from the filters' gains.
template <typename DerivedA, typename DerivedB>
double gamma_pair(const Eigen::MatrixBase<DerivedA>& g_old, const Eigen::MatrixBase<DerivedB>& g_new) {
  if (g_old.size() != g_new.size()) throw DimensionError("gamma_pair: gain vectors differ in length");
  return ((1.0 - g_old.array()) * (1.0 - g_new.array())).mean();
}

/// xi_A = (1/N) tr(I - W^T A).
inline double xi_from_gains(const Vector& g) { return 1.0 - g.mean(); }

/// gamma(g_old, g_new) v_suf + (sigma2/N) tr(W_old W_new^T), the trace in eigenvalue form.
double posterior_cov_entry(const Vector& g_old, const Vector& g_new, double v_suf, double sigma2,
                           const Vector& eigenvalues);

ExtrinsicMessage extrinsic_a(const Vector& x_post, const SufficientStatistic<double>& x_suf, double xi_a,
                             const Vector& posterior_cov_row, const std::vector<double>& xi_history,
                             const Vector& v_suf_row);

struct ModuleAIterate {
  SufficientStatistic<double> suf;
  Vector g_values;
  double xi_a = 0.0;
  Vector posterior_mean;
  Vector posterior_cov_row;  // v_post_{A,t',t} for each stored A-to-B message, then t
  ExtrinsicMessage extrinsic;
};

/// One long-memory module-A update from the B-to-A history. to_b supplies the
/// gains and xi of the A-to-B messages already emitted.
ModuleAIterate module_a_step(const MessageHistory& from_b, const MessageHistory& to_b, const Vector& y,
                             const SpectralView& spec, double sigma2);

}  // namespace lmoamp
