#pragma once

#include <cstdint>
#include <random>

#include "lmoamp/prior.hpp"
#include "lmoamp/types.hpp"

namespace lmoamp {

/// Deterministic generator for one named stream of a seed.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Stream identifiers so that matrix, signal and noise draws never overlap.
enum class Stream : std::uint64_t { Matrix = 1, Signal = 2, Noise = 3 };

/// Thin SVD A = U diag(s) V^T with the eigenvalues of A^T A zero-padded to N.
///
/// The right basis is stored thin (N x min(M, N)); the LMMSE gain vanishes on
/// its orthogonal complement.
struct SpectralView {
  Matrix left_basis;       // M x r
  Vector singular_values;  // r, non-increasing
  Matrix right_basis;      // N x r
  Vector eigenvalues;      // N, squared singular values then zeros

  Index rows() const { return left_basis.rows(); }
  Index cols() const { return right_basis.rows(); }

  /// A x, evaluated through the factors.
  Vector apply(const Eigen::Ref<const Vector>& x) const;
  /// A^T r, evaluated through the factors.
  Vector apply_transpose(const Eigen::Ref<const Vector>& r) const;
  /// Dense reconstruction U diag(s) V^T.
  Matrix dense() const;

  static SpectralView from_factors(Matrix left, Vector singular_values, Matrix right);
};

/// y = A x + w together with its generating pieces.
struct ProblemInstance {
  Matrix A;
  Vector x_true;
  Vector noise;
  Vector y;
  double sigma2 = 0.0;

  Index M() const { return A.rows(); }
  Index N() const { return A.cols(); }
  double delta() const { return double(A.rows()) / double(A.cols()); }
};

/// sigma^2 such that the per-measurement SNR is snr_db for a unit-variance
/// signal and (1/N) tr(A^T A) = 1, i.e. 10^(-snr_db/10) / delta.
double sigma2_from_snr_db(double snr_db, double delta);

/// I.i.d. N(0, 1/N) entries, rescaled so that (1/N) tr(A^T A) = 1 exactly.
Matrix gen_iid_gaussian(Index M, Index N, std::uint64_t seed);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R-diagonal sign fix).
Matrix haar_orthogonal(Index n, std::mt19937_64& rng);
/// First k columns of a Haar-distributed n x n orthogonal matrix.
Matrix haar_stiefel(Index n, Index k, std::mt19937_64& rng);

/// Geometric singular-value profile from s_max to s_max / kappa, scaled so that
/// sum_i s_i^2 = N. Length min(M, N).
Vector cond_controlled_singular_values(Index M, Index N, double kappa);
/// Eigenvalues of A^T A for the profile above, zero-padded to length N.
Vector cond_controlled_eigenvalues(Index M, Index N, double kappa);

/// U diag(s) V^T with Haar U, V and the geometric profile; returned factored.
SpectralView gen_cond_controlled_factored(Index M, Index N, double kappa, std::uint64_t seed);
Matrix gen_cond_controlled(Index M, Index N, double kappa, std::uint64_t seed);
/// U diag(s) V^T with Haar U, V around caller-supplied singular values (length min(M, N)).
SpectralView gen_right_invariant_factored(Index M, Index N, Vector s, std::uint64_t seed);

Vector gen_signal(Index N, const PriorModel& prior, std::uint64_t seed);
Vector gen_noise(Index M, double sigma2, std::uint64_t seed);

/// Draws x and w for a given matrix.
ProblemInstance make_instance(Matrix A, const PriorModel& prior, double sigma2, std::uint64_t seed);

/// Thin SVD of an arbitrary matrix.
SpectralView spectral_view(const Matrix& A);

}  // namespace lmoamp
