#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "lmoamp/errors.hpp"
#include "lmoamp/types.hpp"

namespace lmoamp {

/// Jitter ladder, as multiples of trace(V)/dim added to the diagonal.
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-12, 1e-10, 1e-8};

/// Minimum-variance unbiased weights for correlated measurements of one quantity.
template <typename Scalar>
struct CombinerWeights {
  VectorX<Scalar> weights;   // V^{-1} 1 / (1^T V^{-1} 1)
  Scalar combined_variance;  // w^T V w, i.e. 1 / (1^T V^{-1} 1)
  Scalar jitter;             // absolute diagonal jitter that made V factorizable
  bool latest_only = false;  // structured fallback: all weight on the last measurement
};

template <typename Scalar>
struct SufficientStatistic {
  VectorX<Scalar> mean;
  Scalar variance;
  CombinerWeights<Scalar> weights;
};

/// Solves V w = 1 through a Cholesky factorization of (V + V^T)/2, escalating
/// the diagonal jitter along kJitterLadder until the factorization succeeds.
///
/// The combined variance is evaluated as w^T V w against the un-jittered V:
/// the variance actually carried by the weighted statistic. At the optimum it
/// is stationary in w, so weight errors from jitter or conditioning enter only
/// at second order and nested variances stay monotone.
template <typename Derived>
CombinerWeights<typename Derived::Scalar> solve_weights(const Eigen::MatrixBase<Derived>& V) {
  using Scalar = typename Derived::Scalar;
  const Index n = V.rows();
  if (n < 1 || V.cols() != n) throw DimensionError("solve_weights: covariance must be square and non-empty");
  if (!V.allFinite()) throw DomainError("solve_weights: covariance has non-finite entries");

  const MatrixX<Scalar> sym = (V + V.transpose()) / Scalar(2);
  const Scalar scale = sym.trace() / Scalar(n);
  Scalar jitter = 0;
  for (double rung : kJitterLadder) {
    jitter = Scalar(rung) * scale;
    MatrixX<Scalar> work = sym;
    work.diagonal().array() += jitter;
    Eigen::LLT<MatrixX<Scalar>> llt(work);
    if (llt.info() != Eigen::Success) continue;
    const VectorX<Scalar> x = llt.solve(VectorX<Scalar>::Ones(n));
    const Scalar total = x.sum();
    if (!x.allFinite() || !(total > Scalar(0))) continue;
    VectorX<Scalar> w = x / total;
    const Scalar variance = w.dot(sym * w);
    if (!(variance > Scalar(0))) continue;
    return {std::move(w), variance, jitter};
  }
  std::ostringstream os;
  os << "covariance of dimension " << n << " is not positive definite even with jitter " << jitter;
  throw SingularCovarianceError(os.str(), double(jitter));
}

/// True when V(i, j) = V(j, i) = V(j, j) for all i < j, to rel_tol * max(1, |V(j, j)|).
template <typename Derived>
bool has_degenerate_structure(const Eigen::MatrixBase<Derived>& V, double rel_tol) {
  using Scalar = typename Derived::Scalar;
  const Index n = V.rows();
  if (V.cols() != n) return false;
  for (Index j = 0; j < n; ++j) {
    const Scalar tol = Scalar(rel_tol) * std::max(Scalar(1), std::abs(V(j, j)));
    for (Index i = 0; i < j; ++i) {
      if (std::abs(V(i, j) - V(j, j)) > tol || std::abs(V(j, i) - V(j, j)) > tol) return false;
    }
  }
  return true;
}

/// solve_weights, except that a matrix with the degenerate column structure
/// whose factorization fails everywhere on the ladder (its diagonal is not
/// non-increasing) resolves to the structure's own answer: all weight on the
/// last measurement, variance V(n-1, n-1).
template <typename Derived>
CombinerWeights<typename Derived::Scalar> solve_weights_structured(const Eigen::MatrixBase<Derived>& V,
                                                                    double rel_tol = 1e-8) {
  using Scalar = typename Derived::Scalar;
  try {
    return solve_weights(V);
  } catch (const SingularCovarianceError& e) {
    const Index n = V.rows();
    if (!has_degenerate_structure(V, rel_tol) || !(V(n - 1, n - 1) > Scalar(0))) throw;
    VectorX<Scalar> w = VectorX<Scalar>::Zero(n);
    w[n - 1] = Scalar(1);
    return {std::move(w), V(n - 1, n - 1), Scalar(e.jitter()), true};
  }
}

/// Sufficient statistic of the columns of X: X * weights and its noise variance.
template <typename DerivedX, typename DerivedV>
SufficientStatistic<typename DerivedX::Scalar> combine(const Eigen::MatrixBase<DerivedX>& X,
                                                        const Eigen::MatrixBase<DerivedV>& V,
                                                        bool structured_fallback = false) {
  if (X.cols() != V.rows()) throw DimensionError("combine: column count of X must equal covariance dimension");
  auto w = structured_fallback ? solve_weights_structured(V) : solve_weights(V);
  VectorX<typename DerivedX::Scalar> mean = X * w.weights;
  const auto variance = w.combined_variance;
  return {std::move(mean), variance, std::move(w)};
}

/// Combined variance of every leading principal submatrix V_0, ..., V_t.
/// For a positive definite V the sequence is non-increasing.
template <typename Derived>
std::vector<typename Derived::Scalar> nested_combined_variances(const Eigen::MatrixBase<Derived>& V) {
  std::vector<typename Derived::Scalar> out;
  out.reserve(std::size_t(V.rows()));
  for (Index k = 1; k <= V.rows(); ++k) out.push_back(solve_weights(V.topLeftCorner(k, k)).combined_variance);
  return out;
}

/// For V with V(i, j) = V(j, j) whenever i < j, the combined variance equals
/// the last diagonal entry. Returns the combined variance.
template <typename Derived>
typename Derived::Scalar check_degenerate_collapse(const Eigen::MatrixBase<Derived>& V) {
  using Scalar = typename Derived::Scalar;
  const Index n = V.rows();
  if (n < 1 || V.cols() != n) throw DimensionError("check_degenerate_collapse: covariance must be square");
  if (!has_degenerate_structure(V, 1e-10)) {
    throw PreconditionError("check_degenerate_collapse: off-diagonal entries must equal the later diagonal");
  }
  const Scalar combined = solve_weights(V).combined_variance;
  const Scalar last = V(n - 1, n - 1);
  if (std::abs(combined - last) > Scalar(1e-8) * std::abs(last)) {
    throw InvariantError("check_degenerate_collapse: combined variance differs from the last diagonal");
  }
  return combined;
}

}  // namespace lmoamp
