#include "lmoamp/sensing.hpp"

#include <cmath>

#include "lmoamp/errors.hpp"

namespace lmoamp {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed & 0xffffffffu), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix G(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) G(i, j) = nd(rng);
  return G;
}

Matrix q_with_sign_fix(const Matrix& G, Index k) {
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(G.rows(), k);
  const Matrix& R = qr.matrixQR();
  for (Index j = 0; j < k; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

void check_dims(Index M, Index N) {
  if (M < 1 || N < 1 || M > N) throw DomainError("sensing: dimensions must satisfy 1 <= M <= N");
}

}  // namespace

Vector SpectralView::apply(const Eigen::Ref<const Vector>& x) const {
  const Vector coeff = singular_values.cwiseProduct(right_basis.transpose() * x);
  return left_basis * coeff;
}

Vector SpectralView::apply_transpose(const Eigen::Ref<const Vector>& r) const {
  const Vector coeff = singular_values.cwiseProduct(left_basis.transpose() * r);
  return right_basis * coeff;
}

Matrix SpectralView::dense() const {
  return left_basis * singular_values.asDiagonal() * right_basis.transpose();
}

SpectralView SpectralView::from_factors(Matrix left, Vector singular_values, Matrix right) {
  const Index r = singular_values.size();
  if (left.cols() != r || right.cols() != r) throw DimensionError("SpectralView: factor shapes disagree");
  SpectralView view;
  view.left_basis = std::move(left);
  view.singular_values = std::move(singular_values);
  view.right_basis = std::move(right);
  view.eigenvalues = Vector::Zero(view.right_basis.rows());
  view.eigenvalues.head(r) = view.singular_values.array().square().matrix();
  return view;
}

double sigma2_from_snr_db(double snr_db, double delta) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  return std::pow(10.0, -snr_db / 10.0) / delta;
}

Matrix gen_iid_gaussian(Index M, Index N, std::uint64_t seed) {
  check_dims(M, N);
  auto rng = make_rng(seed, std::uint64_t(Stream::Matrix));
  Matrix A = gaussian_matrix(M, N, rng) / std::sqrt(double(N));
  A *= std::sqrt(double(N) / A.squaredNorm());
  return A;
}

Matrix haar_orthogonal(Index n, std::mt19937_64& rng) { return haar_stiefel(n, n, rng); }

Matrix haar_stiefel(Index n, Index k, std::mt19937_64& rng) {
  if (k < 1 || k > n) throw DomainError("haar_stiefel: need 1 <= k <= n");
  return q_with_sign_fix(gaussian_matrix(n, k, rng), k);
}

Vector cond_controlled_singular_values(Index M, Index N, double kappa) {
  check_dims(M, N);
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw DomainError("condition number kappa must be >= 1");
  const Index r = std::min(M, N);
  Vector s(r);
  for (Index i = 0; i < r; ++i) s[i] = r == 1 ? 1.0 : std::pow(kappa, -double(i) / double(r - 1));
  s *= std::sqrt(double(N) / s.squaredNorm());
  return s;
}

Vector cond_controlled_eigenvalues(Index M, Index N, double kappa) {
  const Vector s = cond_controlled_singular_values(M, N, kappa);
  Vector lambda = Vector::Zero(N);
  lambda.head(s.size()) = s.array().square().matrix();
  return lambda;
}

SpectralView gen_cond_controlled_factored(Index M, Index N, double kappa, std::uint64_t seed) {
  return gen_right_invariant_factored(M, N, cond_controlled_singular_values(M, N, kappa), seed);
}

SpectralView gen_right_invariant_factored(Index M, Index N, Vector s, std::uint64_t seed) {
  if (s.size() != std::min(M, N)) throw DimensionError("gen_right_invariant_factored: need min(M, N) singular values");
  if ((s.array() < 0.0).any() || !s.allFinite()) throw DomainError("gen_right_invariant_factored: singular values must be finite and >= 0");
  auto rng = make_rng(seed, std::uint64_t(Stream::Matrix));
  Matrix U = haar_orthogonal(M, rng);
  Matrix V = haar_stiefel(N, s.size(), rng);
  return SpectralView::from_factors(std::move(U), std::move(s), std::move(V));
}

Matrix gen_cond_controlled(Index M, Index N, double kappa, std::uint64_t seed) {
  return gen_cond_controlled_factored(M, N, kappa, seed).dense();
}

Vector gen_signal(Index N, const PriorModel& prior, std::uint64_t seed) {
  if (N < 1) throw DomainError("gen_signal: N must be positive");
  auto rng = make_rng(seed, std::uint64_t(Stream::Signal));
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Vector x(N);
  if (prior.kind() == PriorKind::PureGaussian) {
    for (Index i = 0; i < N; ++i) x[i] = nd(rng);
    return x;
  }
  const double sd = std::sqrt(prior.component_variance());
  for (Index i = 0; i < N; ++i) {
    const bool active = ud(rng) < prior.rho();
    const double z = nd(rng);
    x[i] = active ? sd * z : 0.0;
  }
  return x;
}

Vector gen_noise(Index M, double sigma2, std::uint64_t seed) {
  if (M < 1) throw DomainError("gen_noise: M must be positive");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw DomainError("gen_noise: sigma2 must be finite and >= 0");
  if (sigma2 == 0.0) return Vector::Zero(M);
  auto rng = make_rng(seed, std::uint64_t(Stream::Noise));
  std::normal_distribution<double> nd(0.0, std::sqrt(sigma2));
  Vector w(M);
  for (Index i = 0; i < M; ++i) w[i] = nd(rng);
  return w;
}

ProblemInstance make_instance(Matrix A, const PriorModel& prior, double sigma2, std::uint64_t seed) {
  ProblemInstance inst;
  inst.x_true = gen_signal(A.cols(), prior, seed);
  inst.noise = gen_noise(A.rows(), sigma2, seed);
  inst.y = A * inst.x_true + inst.noise;
  inst.A = std::move(A);
  inst.sigma2 = sigma2;
  return inst;
}

SpectralView spectral_view(const Matrix& A) {
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw DomainError("spectral_view: SVD did not converge");
  return SpectralView::from_factors(svd.matrixU(), svd.singularValues(), svd.matrixV());
}

}  // namespace lmoamp
