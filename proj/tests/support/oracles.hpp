#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lmoamp/prior.hpp"
#include "lmoamp/types.hpp"

namespace oracle {

using lmoamp::Index;
using lmoamp::Matrix;
using lmoamp::PriorModel;
using lmoamp::Vector;

inline double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Adaptive Simpson integration on [a, b]; panels also stop refining once
/// their correction falls to rounding level relative to the panel value.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        const double diff = std::abs(left + right - whole);
        if (d <= 0 || diff <= 15.0 * eps || diff <= 1e-14 * std::abs(left + right)) {
          return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) + rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Posterior moments E[X^k | X + W = y] for k = 1, 2 by direct integration
/// against the prior, with the point mass handled analytically.
struct Moments {
  double mean;
  double variance;
};

inline Moments posterior_moments(double y, double v, const PriorModel& prior) {
  const double s2 = prior.kind() == lmoamp::PriorKind::PureGaussian ? 1.0 : prior.component_variance();
  const double w = prior.kind() == lmoamp::PriorKind::PureGaussian ? 1.0 : prior.rho();
  const double sd = std::sqrt(s2);
  // The likelihood is negligible beyond 40 noise deviations of y.
  const double half = 40.0 * std::sqrt(std::min(v, s2));
  const double lo = std::max(y - half, -40.0 * sd), hi = std::min(y + half, 40.0 * sd);
  auto slab = [&](int k) {
    return simpson([&](double x) { return std::pow(x, k) * normal_pdf(x, s2) * normal_pdf(y - x, v); }, lo, hi,
                   1e-15);
  };
  const double z0 = (1.0 - w) * normal_pdf(y, v) + w * slab(0);
  const double m1 = w * slab(1) / z0;
  const double m2 = w * slab(2) / z0;
  return {m1, m2 - m1 * m1};
}

/// Dense LMMSE filter W = v (sigma2 I + v A A^T)^{-1} A.
inline Matrix dense_filter(const Matrix& A, double v, double sigma2) {
  const Index M = A.rows();
  const Matrix K = sigma2 * Matrix::Identity(M, M) + v * A * A.transpose();
  return v * K.ldlt().solve(A);
}

/// Explicit-inverse combiner weights.
inline Vector dense_weights(const Matrix& V) {
  const Matrix inv = V.inverse();
  const Vector x = inv * Vector::Ones(V.rows());
  return x / x.sum();
}

/// Self-normalized importance-sampling estimate of
/// E[(X - a)(X - b) | S = s_new, S' = s_old] with S = X + W, S' = S + Z.
/// The S' likelihood factor does not depend on X and cancels.
struct McEstimate {
  double value;
  double stderr_;
};

inline McEstimate pair_covariance_mc(double s_old, double s_new, double v_old, double v_new, const PriorModel& prior,
                                     std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  const double a = lmoamp::posterior_mean(s_old, v_old, prior);
  const double b = lmoamp::posterior_mean(s_new, v_new, prior);
  const bool gauss = prior.kind() == lmoamp::PriorKind::PureGaussian;
  const double sd = std::sqrt(gauss ? 1.0 : prior.component_variance());
  double sw = 0.0, swh = 0.0, sw2 = 0.0, sw2h = 0.0, sw2h2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const bool active = gauss || ud(rng) < prior.rho();
    const double z = nd(rng);
    const double x = active ? sd * z : 0.0;
    const double w = normal_pdf(s_new - x, v_new);
    const double h = (x - a) * (x - b);
    sw += w;
    swh += w * h;
    sw2 += w * w;
    sw2h += w * w * h;
    sw2h2 += w * w * h * h;
  }
  const double est = swh / sw;
  // Delta-method variance of the ratio estimator.
  const double var = (sw2h2 - 2.0 * est * sw2h + est * est * sw2) / (sw * sw);
  return {est, std::sqrt(var)};
}

/// Plain Monte Carlo of E[(f(X + Z; v) - X)^2].
inline McEstimate mmse_mc(double v, const PriorModel& prior, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  const bool gauss = prior.kind() == lmoamp::PriorKind::PureGaussian;
  const double sd = std::sqrt(gauss ? 1.0 : prior.component_variance());
  const double nv = std::sqrt(v);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const bool active = gauss || ud(rng) < prior.rho();
    const double g = nd(rng);
    const double x = active ? sd * g : 0.0;
    const double e = lmoamp::posterior_mean(x + nv * nd(rng), v, prior) - x;
    s += e * e;
    s2 += e * e * e * e;
  }
  const double n = double(samples);
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / (n - 1.0))};
}

/// Random symmetric positive definite matrix G G^T + eps I.
inline Matrix random_pd(Index n, std::mt19937_64& rng, double eps = 0.1) {
  std::normal_distribution<double> nd;
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) G(i, j) = nd(rng);
  return G * G.transpose() + eps * Matrix::Identity(n, n);
}

/// V(i, j) = d[max(i, j)] for a strictly decreasing d: the degenerate structure.
inline Matrix degenerate_structured(const Vector& d) {
  const Index n = d.size();
  Matrix V(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) V(i, j) = d[std::max(i, j)];
  return V;
}

}  // namespace oracle
