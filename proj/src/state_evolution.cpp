#include "lmoamp/state_evolution.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "lmoamp/combiner.hpp"
#include "lmoamp/errors.hpp"
#include "lmoamp/messages.hpp"
#include "lmoamp/module_a.hpp"

namespace lmoamp {

void SpectrumInput::validate() const {
  if (eigenvalues.size() < 1) throw DomainError("spectrum is empty");
  if ((eigenvalues.array() < 0.0).any() || !eigenvalues.allFinite()) {
    throw DomainError("spectrum eigenvalues must be finite and non-negative");
  }
  if (std::abs(eigenvalues.mean() - 1.0) > 1e-10) throw DomainError("spectrum must have unit mean eigenvalue");
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
}

std::uint64_t SpectrumInput::digest() const {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(eigenvalues.data());
  for (std::size_t i = 0; i < std::size_t(eigenvalues.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void check_inputs(const SpectrumInput& spectrum, double sigma2, int iterations) {
  spectrum.validate();
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("state evolution requires sigma2 > 0");
  if (iterations < 1) throw DomainError("state evolution requires at least one iteration");
}

SEKey make_key(const SpectrumInput& spectrum, const PriorModel& prior, double sigma2, int iterations) {
  return {spectrum.digest(), spectrum.delta, sigma2, prior, iterations};
}

double harmonic_difference(double post, double prior_var, int t) {
  const double inv = 1.0 / post - 1.0 / prior_var;
  if (!(inv > 0.0) || !std::isfinite(inv)) {
    std::ostringstream os;
    os << "harmonic difference 1/" << post << " - 1/" << prior_var << " is not positive";
    throw DegenerateError(os.str(), t);
  }
  return 1.0 / inv;
}

double guarded_xi(double xi, const char* module, int t) {
  if (!(xi > 0.0) || !std::isfinite(xi) || std::abs(1.0 - xi) <= 1e-12) {
    std::ostringstream os;
    os << module << ": xi = " << xi << " is degenerate";
    throw DegenerateError(os.str(), t);
  }
  return xi;
}

void append_row(Matrix& m, const Vector& row) {
  const Index k = m.rows();
  m.conservativeResize(k + 1, k + 1);
  m.row(k) = row.transpose();
  m.col(k) = row;
}

}  // namespace

SETrajectory se_lm_oamp(const SpectrumInput& spectrum, const PriorModel& prior, double sigma2, int iterations) {
  check_inputs(spectrum, sigma2, iterations);
  const Vector& lambda = spectrum.eigenvalues;
  const Index N = lambda.size();

  SETrajectory se;
  se.kind = SEKind::LongMemory;
  se.key = make_key(spectrum, prior, sigma2, iterations);
  se.post_a_matrix = Matrix::Zero(iterations, iterations);
  se.post_b_matrix = Matrix::Zero(iterations, iterations);

  Matrix v_ba = Matrix::Constant(1, 1, prior.variance());
  Matrix v_ab(0, 0);
  std::vector<double> producer_xi_ba{0.0};  // the initial B->A message
  std::vector<double> xi_a_hist;
  std::vector<Vector> gains;

  for (int t = 0; t < iterations; ++t) {
    // module A
    const auto w_ba = solve_weights(v_ba);
    const double v_suf = w_ba.combined_variance;
    Vector g = lmmse_gains(lambda, v_suf, sigma2);
    double resolvent_trace = 0.0;  // tr(Xi_t A A^T) in eigenvalue form
    for (Index i = 0; i < N; ++i) resolvent_trace += v_suf * lambda[i] / (sigma2 + v_suf * lambda[i]);
    const double post_a_diag = v_suf - v_suf * resolvent_trace / double(N);

    Vector post_a_row(t + 1);
    double spread_a = 0.0;
    for (int tp = 0; tp < t; ++tp) {
      post_a_row[tp] = posterior_cov_entry(gains[std::size_t(tp)], g, v_suf, sigma2, lambda);
      spread_a = std::max(spread_a, std::abs(post_a_row[tp] - post_a_diag));
    }
    post_a_row[t] = post_a_diag;
    if (spread_a > kConstancyTol) {
      std::ostringstream os;
      os << "module-A SE cross entries deviate from the diagonal by " << spread_a << " at iteration " << t;
      throw InvariantError(os.str());
    }
    const double xi_a = guarded_xi(post_a_diag / v_suf, "SE module A", t);
    xi_a_hist.push_back(xi_a);
    const Vector row_ab = extrinsic_cov_row(post_a_row, xi_a_hist, xi_a, Vector::Constant(t + 1, v_suf));
    append_row(v_ab, row_ab);
    gains.push_back(std::move(g));

    // module B
    const auto w_ab = solve_weights(v_ab);
    const double u = w_ab.combined_variance;
    const double post_b_diag = mmse(u, prior);
    Vector post_b_row(t + 1);
    double spread_b = 0.0;
    for (int tp = 0; tp < t; ++tp) {
      // E[z_t' z_t] equals the later combined variance
      post_b_row[tp] = cross_mmse(se.v_suf_ab[std::size_t(tp)], u, u, prior);
      spread_b = std::max(spread_b, std::abs(post_b_row[tp] - post_b_diag));
    }
    post_b_row[t] = post_b_diag;
    if (spread_b > kConstancyTol) {
      std::ostringstream os;
      os << "module-B SE cross entries deviate from the diagonal by " << spread_b << " at iteration " << t;
      throw InvariantError(os.str());
    }
    const double xi_b = guarded_xi(post_b_diag / u, "SE module B", t);

    // covariances of the new B->A message with messages 0..t+1
    Vector row_ba(t + 2);
    std::vector<double> xi_row = producer_xi_ba;
    xi_row.push_back(xi_b);
    Vector post_row(t + 2);
    post_row[0] = post_b_diag;
    post_row.tail(t + 1) = post_b_row;
    row_ba = extrinsic_cov_row(post_row, xi_row, xi_b, Vector::Constant(t + 2, u));
    append_row(v_ba, row_ba);
    producer_xi_ba.push_back(xi_b);

    se.v_suf_ba.push_back(v_suf);
    se.v_suf_ab.push_back(u);
    se.v_ab.push_back(row_ab[t]);
    se.v_ba.push_back(row_ba[t + 1]);
    se.post_a.push_back(post_a_diag);
    se.post_b.push_back(post_b_diag);
    se.xi_a.push_back(xi_a);
    se.xi_b.push_back(xi_b);
    se.jitter_ba.push_back(w_ba.jitter);
    se.jitter_ab.push_back(w_ab.jitter);
    se.offdiag_spread_a.push_back(spread_a);
    se.offdiag_spread_b.push_back(spread_b);
    se.post_a_matrix.col(t).head(t + 1) = post_a_row;
    se.post_a_matrix.row(t).head(t + 1) = post_a_row.transpose();
    se.post_b_matrix.col(t).head(t + 1) = post_b_row;
    se.post_b_matrix.row(t).head(t + 1) = post_b_row.transpose();
  }
  se.fixed_point = fixed_point(se, kFixedPointTol);
  return se;
}

SETrajectory se_oamp(const SpectrumInput& spectrum, const PriorModel& prior, double sigma2, int iterations) {
  check_inputs(spectrum, sigma2, iterations);
  const Vector& lambda = spectrum.eigenvalues;
  const double N = double(lambda.size());

  SETrajectory se;
  se.kind = SEKind::Conventional;
  se.key = make_key(spectrum, prior, sigma2, iterations);

  double v_ba = prior.variance();
  for (int t = 0; t < iterations; ++t) {
    const double trace = (lambda.array() / (sigma2 + v_ba * lambda.array())).sum();
    const double post_a = v_ba - v_ba * v_ba * trace / N;
    const double v_ab = harmonic_difference(post_a, v_ba, t);
    const double post_b = mmse(v_ab, prior);
    const double v_next = harmonic_difference(post_b, v_ab, t);

    se.v_suf_ba.push_back(v_ba);
    se.v_suf_ab.push_back(v_ab);
    se.v_ab.push_back(v_ab);
    se.v_ba.push_back(v_next);
    se.post_a.push_back(post_a);
    se.post_b.push_back(post_b);
    se.xi_a.push_back(post_a / v_ba);
    se.xi_b.push_back(post_b / v_ab);
    se.jitter_ba.push_back(0.0);
    se.jitter_ab.push_back(0.0);
    se.offdiag_spread_a.push_back(0.0);
    se.offdiag_spread_b.push_back(0.0);
    v_ba = v_next;
  }
  se.fixed_point = fixed_point(se, kFixedPointTol);
  return se;
}

std::optional<FixedPoint> fixed_point(const SETrajectory& trajectory, double tol) {
  if (!(tol > 0.0)) throw DomainError("fixed_point: tolerance must be positive");
  const auto& p = trajectory.post_b;
  for (std::size_t t = 1; t < p.size(); ++t) {
    if (std::abs(p[t] - p[t - 1]) < tol) return FixedPoint{p[t], int(t)};
  }
  return std::nullopt;
}

EquivalenceReport equivalence_report(const SETrajectory& lm, const SETrajectory& oamp, double tol) {
  EquivalenceReport r;
  r.tolerance = tol;
  r.config_mismatch = !(lm.key == oamp.key);
  const std::size_t n = std::min(lm.post_b.size(), oamp.post_b.size());
  for (std::size_t t = 0; t < n; ++t) {
    r.gaps.push_back(std::abs(lm.post_b[t] - oamp.post_b[t]));
    r.max_gap = std::max(r.max_gap, r.gaps.back());
  }
  for (double s : lm.offdiag_spread_b) r.max_offdiag_spread = std::max(r.max_offdiag_spread, s);
  for (double s : lm.offdiag_spread_a) r.max_offdiag_spread = std::max(r.max_offdiag_spread, s);
  r.lm_fixed_point = lm.fixed_point;
  r.oamp_fixed_point = oamp.fixed_point;
  if (lm.fixed_point && oamp.fixed_point) r.fixed_point_gap = std::abs(lm.fixed_point->value - oamp.fixed_point->value);
  r.pass = !r.config_mismatch && n > 0 && r.max_gap <= tol;
  return r;
}

}  // namespace lmoamp
