#pragma once

#include <array>
#include <string>

#include "lmoamp/types.hpp"

namespace lmoamp {

enum class PriorKind { BernoulliGaussian, PureGaussian };

/// Zero-mean, unit-variance scalar signal prior.
///
/// Bernoulli-Gaussian: X = 0 with probability 1 - rho, otherwise
/// X ~ N(0, 1/rho). rho = 1 is the standard Gaussian.
class PriorModel {
public:
  static PriorModel bernoulli_gaussian(double rho);
  static PriorModel gaussian();

  PriorKind kind() const { return kind_; }
  double rho() const { return rho_; }
  double component_variance() const { return 1.0 / rho_; }
  double variance() const { return 1.0; }

  /// True when the posterior mean is an affine function of the observation.
  bool is_linear() const { return kind_ == PriorKind::PureGaussian || rho_ == 1.0; }

  /// Gaussian mixture view: weights and variances of the components.
  struct Component {
    double weight;
    double variance;
  };
  std::array<Component, 2> components() const;
  int component_count() const { return kind_ == PriorKind::PureGaussian ? 1 : 2; }

  std::string describe() const;

  friend bool operator==(const PriorModel&, const PriorModel&) = default;

private:
  PriorModel(PriorKind kind, double rho) : kind_(kind), rho_(rho) {}

  PriorKind kind_;
  double rho_;
};

struct DenoiserEval {
  double mean;
  double variance;
  double derivative;
};

/// Posterior statistics of X given X + W = y, W ~ N(0, v), in one pass.
DenoiserEval denoise(double y, double v, const PriorModel& prior);

double posterior_mean(double y, double v, const PriorModel& prior);
double posterior_variance(double y, double v, const PriorModel& prior);
double posterior_mean_derivative(double y, double v, const PriorModel& prior);

/// C(s_old, s_new; v_old, v_new) under nested noise (S_old = S_new + Z).
/// Requires v_old >= v_new; reduces to posterior_variance(s_new, v_new).
double pair_covariance(double s_old, double s_new, double v_old, double v_new,
                       const PriorModel& prior);

/// E[(f_opt(X + Z; v) - X)^2] with Z ~ N(0, v).
double mmse(double v, const PriorModel& prior);

/// E[(f_opt(X + Z'; v_old) - X)(f_opt(X + Z; v_new) - X)] where (Z', Z) is
/// zero-mean Gaussian with covariance [[v_old, cov], [cov, v_new]].
double cross_mmse(double v_old, double v_new, double cov, const PriorModel& prior);

}  // namespace lmoamp
