#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lmoamp/prior.hpp"
#include "lmoamp/types.hpp"

namespace lmoamp {

inline constexpr double kEquivalenceTol = 1e-8;
inline constexpr double kConstancyTol = 1e-10;
inline constexpr double kFixedPointTol = 1e-10;

/// Eigenvalues of A^T A (zero-padded to N) standing in for the limiting spectrum.
struct SpectrumInput {
  Vector eigenvalues;
  double delta = 1.0;

  /// Mean eigenvalue must be 1 within 1e-10; eigenvalues must be >= 0.
  void validate() const;
  /// FNV-1a digest of the eigenvalue bytes, used to match configurations.
  std::uint64_t digest() const;
};

struct SEKey {
  std::uint64_t spectrum_digest = 0;
  double delta = 0.0;
  double sigma2 = 0.0;
  PriorModel prior = PriorModel::gaussian();
  int iterations = 0;

  friend bool operator==(const SEKey&, const SEKey&) = default;
};

struct FixedPoint {
  double value;
  int iteration;
};

enum class SEKind { LongMemory, Conventional };

/// Iteration-indexed state-evolution quantities. Index t of the sequences
/// refers to iteration t; post_b[t] is the module-B posterior variance
/// produced in iteration t.
struct SETrajectory {
  SEKind kind = SEKind::LongMemory;
  SEKey key;
  std::vector<double> v_suf_ba;  // long memory: combined variance; conventional: v_B->A,t
  std::vector<double> v_suf_ab;  // long memory: combined variance; conventional: v_A->B,t
  std::vector<double> v_ab;      // extrinsic diagonal A->B
  std::vector<double> v_ba;      // extrinsic diagonal B->A (message t+1)
  std::vector<double> post_a;
  std::vector<double> post_b;
  std::vector<double> xi_a;
  std::vector<double> xi_b;
  std::vector<double> jitter_ba;
  std::vector<double> jitter_ab;
  std::vector<double> offdiag_spread_a;  // max_t' |post_a(t', t) - post_a(t, t)|
  std::vector<double> offdiag_spread_b;
  Matrix post_a_matrix;  // long memory only, symmetric T x T
  Matrix post_b_matrix;
  std::optional<FixedPoint> fixed_point;

  int iterations() const { return int(post_b.size()); }
};

/// Two-dimensional recursions for Bayes-optimal long-memory OAMP. Cross
/// entries are computed from their own formulas and then checked against the
/// diagonal (InvariantError beyond kConstancyTol).
SETrajectory se_lm_oamp(const SpectrumInput& spectrum, const PriorModel& prior, double sigma2, int iterations);

/// Scalar recursions for conventional Bayes-optimal OAMP.
SETrajectory se_oamp(const SpectrumInput& spectrum, const PriorModel& prior, double sigma2, int iterations);

/// First t >= 1 with |post_b[t] - post_b[t-1]| < tol.
std::optional<FixedPoint> fixed_point(const SETrajectory& trajectory, double tol);

struct EquivalenceReport {
  bool config_mismatch = false;
  std::vector<double> gaps;  // |post_b(LM) - post_b(OAMP)| per iteration
  double max_gap = 0.0;
  double max_offdiag_spread = 0.0;
  std::optional<double> fixed_point_gap;
  std::optional<FixedPoint> lm_fixed_point;
  std::optional<FixedPoint> oamp_fixed_point;
  double tolerance = kEquivalenceTol;
  bool pass = false;
};

EquivalenceReport equivalence_report(const SETrajectory& lm, const SETrajectory& oamp, double tol = kEquivalenceTol);

}  // namespace lmoamp
