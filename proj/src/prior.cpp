#include "lmoamp/prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lmoamp/errors.hpp"
#include "lmoamp/quadrature.hpp"

namespace lmoamp {

PriorModel PriorModel::bernoulli_gaussian(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("Bernoulli-Gaussian rho must lie in (0, 1]");
  return PriorModel(PriorKind::BernoulliGaussian, rho);
}

PriorModel PriorModel::gaussian() { return PriorModel(PriorKind::PureGaussian, 1.0); }

std::array<PriorModel::Component, 2> PriorModel::components() const {
  if (kind_ == PriorKind::PureGaussian) return {Component{1.0, 1.0}, Component{0.0, 0.0}};
  return {Component{1.0 - rho_, 0.0}, Component{rho_, 1.0 / rho_}};
}

std::string PriorModel::describe() const {
  std::ostringstream os;
  if (kind_ == PriorKind::PureGaussian) {
    os << "gaussian";
  } else {
    os << "bernoulli_gaussian(rho=" << rho_ << ")";
  }
  return os.str();
}

namespace {

void check_noise(double y, double v) {
  if (!std::isfinite(v) || !(v > 0.0)) throw DomainError("noise variance must be positive and finite");
  if (!std::isfinite(y)) throw DomainError("observation must be finite");
}

// Per-component Gaussian posterior pieces for y = x + w, x ~ N(0, s2), w ~ N(0, v).
struct ComponentPosterior {
  double log_evidence;  // log(weight * N(y; 0, s2 + v))
  double dlog_evidence;  // d/dy of the above
  double mean;
  double dmean;
  double variance;
};

ComponentPosterior component_posterior(double y, double v, const PriorModel::Component& c) {
  const double u = c.variance + v;
  ComponentPosterior p{};
  p.log_evidence = std::log(c.weight) - 0.5 * std::log(2.0 * std::numbers::pi * u) - 0.5 * y * y / u;
  p.dlog_evidence = -y / u;
  p.dmean = c.variance / u;
  p.mean = p.dmean * y;
  p.variance = c.variance * v / u;
  return p;
}

struct MixturePosterior {
  std::array<double, 2> prob{};
  std::array<ComponentPosterior, 2> comp{};
  int count = 0;
};

MixturePosterior mixture_posterior(double y, double v, const PriorModel& prior) {
  MixturePosterior mp;
  const auto comps = prior.components();
  mp.count = prior.component_count();
  double lmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < mp.count; ++k) {
    mp.comp[k] = component_posterior(y, v, comps[k]);
    lmax = std::max(lmax, mp.comp[k].log_evidence);
  }
  double total = 0.0;
  for (int k = 0; k < mp.count; ++k) {
    mp.prob[k] = std::exp(mp.comp[k].log_evidence - lmax);
    total += mp.prob[k];
  }
  for (int k = 0; k < mp.count; ++k) mp.prob[k] /= total;
  return mp;
}

double mixture_mean(const MixturePosterior& mp) {
  double f = 0.0;
  for (int k = 0; k < mp.count; ++k) f += mp.prob[k] * mp.comp[k].mean;
  return f;
}

double mixture_variance(const MixturePosterior& mp, double f) {
  double var = 0.0;
  for (int k = 0; k < mp.count; ++k) {
    const double d = mp.comp[k].mean - f;
    var += mp.prob[k] * (mp.comp[k].variance + d * d);
  }
  return var;
}

}  // namespace

DenoiserEval denoise(double y, double v, const PriorModel& prior) {
  check_noise(y, v);
  const MixturePosterior mp = mixture_posterior(y, v, prior);
  DenoiserEval out{};
  out.mean = mixture_mean(mp);
  out.variance = mixture_variance(mp, out.mean);

  // d/dy sum_k p_k m_k with p_k' = p_k (l_k' - sum_j p_j l_j')
  double mean_dlog = 0.0;
  for (int k = 0; k < mp.count; ++k) mean_dlog += mp.prob[k] * mp.comp[k].dlog_evidence;
  double deriv = 0.0;
  for (int k = 0; k < mp.count; ++k) {
    const auto& c = mp.comp[k];
    deriv += mp.prob[k] * ((c.dlog_evidence - mean_dlog) * c.mean + c.dmean);
  }
  out.derivative = deriv;
  return out;
}

double posterior_mean(double y, double v, const PriorModel& prior) {
  check_noise(y, v);
  return mixture_mean(mixture_posterior(y, v, prior));
}

double posterior_variance(double y, double v, const PriorModel& prior) {
  check_noise(y, v);
  const MixturePosterior mp = mixture_posterior(y, v, prior);
  return mixture_variance(mp, mixture_mean(mp));
}

double posterior_mean_derivative(double y, double v, const PriorModel& prior) {
  return denoise(y, v, prior).derivative;
}

double pair_covariance(double s_old, double s_new, double v_old, double v_new,
                       const PriorModel& prior) {
  check_noise(s_old, v_old);
  check_noise(s_new, v_new);
  if (v_old < v_new) {
    throw PreconditionError("pair_covariance requires v_old >= v_new (noise variances are non-increasing)");
  }
  // S_new is sufficient for X given (S_old, S_new): E[X | S_old, S_new] = E[X | S_new],
  // so the cross term (f_new - f_old)(E[X|both] - f_new) vanishes.
  return posterior_variance(s_new, v_new, prior);
}

double mmse(double v, const PriorModel& prior) {
  if (!std::isfinite(v) || !(v > 0.0)) throw DomainError("mmse: noise variance must be positive and finite");
  const NormalExpectation expect{};
  const auto comps = prior.components();
  double total = 0.0;
  for (int k = 0; k < prior.component_count(); ++k) {
    const double sd = std::sqrt(comps[k].variance + v);
    total += comps[k].weight * expect(0.0, sd, [&](double y) { return posterior_variance(y, v, prior); });
  }
  return total;
}

double cross_mmse(double v_old, double v_new, double cov, const PriorModel& prior) {
  if (!std::isfinite(v_old) || !std::isfinite(v_new) || !std::isfinite(cov) || !(v_old > 0.0) ||
      !(v_new > 0.0)) {
    throw DomainError("cross_mmse: variances must be positive and finite");
  }
  const double det = v_old * v_new - cov * cov;
  if (det < -1e-10 * v_old * v_new) {
    std::ostringstream os;
    os.precision(17);
    os << "cross_mmse: noise covariance is not positive semidefinite (v_old=" << v_old << ", v_new=" << v_new
       << ", cov=" << cov << ")";
    throw DomainError(os.str());
  }

  // Nested noise: Y_old = Y_new + E with E independent, so Y_new is sufficient.
  if (cov == v_new) return mmse(v_new, prior);

  // Z' = a Z + E with E independent of Z.
  const double a = cov / v_new;
  const double resid = std::max(0.0, v_old - cov * a);

  const NormalExpectation outer{};
  const NormalExpectation inner_expect{.abs_tol = 1e-13};
  const auto comps = prior.components();

  // Given y = x + z: x | y is a Gaussian mixture, y' = (1 - a) x + a y + e.
  // Per component j, E[f_old(y') (d - E[x | y', y, j])] needs E[f_old(y')] and
  // E[f_old(y') (y' - mu_j)] under y' ~ N(mu_j, tau2_j); components sharing
  // (mu, tau2) reuse them.
  auto conditional = [&](double y) {
    const MixturePosterior mp = mixture_posterior(y, v_new, prior);
    const double d = mixture_mean(mp);
    double acc = 0.0;
    double cached_mu = std::numeric_limits<double>::quiet_NaN(), cached_tau2 = cached_mu;
    double f0 = 0.0, f1 = 0.0;
    for (int j = 0; j < mp.count; ++j) {
      const double m = mp.comp[j].mean;
      const double c = mp.comp[j].variance;
      const double mu = (1.0 - a) * m + a * y;
      const double tau2 = (1.0 - a) * (1.0 - a) * c + resid;
      const double gain = tau2 > 0.0 ? (1.0 - a) * c / tau2 : 0.0;
      if (mu != cached_mu || tau2 != cached_tau2) {
        const double tau = std::sqrt(tau2);
        f0 = inner_expect(mu, tau, [&](double yp) { return posterior_mean(yp, v_old, prior); });
        f1 = gain != 0.0 ? inner_expect(mu, tau, [&](double yp) { return posterior_mean(yp, v_old, prior) * (yp - mu); })
                         : 0.0;
        cached_mu = mu;
        cached_tau2 = tau2;
      }
      acc += mp.prob[j] * ((d - m) * f0 - gain * f1 + c + (m - d) * m);
    }
    return acc;
  };

  double total = 0.0;
  for (int k = 0; k < prior.component_count(); ++k) {
    const double sd = std::sqrt(comps[k].variance + v_new);
    total += comps[k].weight * outer(0.0, sd, conditional);
  }
  return total;
}

}  // namespace lmoamp
