#include <doctest.h>

#include <random>

#include "lmoamp/combiner.hpp"
#include "lmoamp/errors.hpp"
#include "lmoamp/messages.hpp"
#include "oracles.hpp"

using namespace lmoamp;

TEST_CASE("single measurement") {
  Matrix V(1, 1);
  V << 0.7;
  const auto w = solve_weights(V);
  CHECK(w.weights[0] == 1.0);
  CHECK(w.combined_variance == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(w.jitter == 0.0);
}

TEST_CASE("independent measurements combine harmonically") {
  const Matrix V = Vector(Vector::LinSpaced(3, 1.0, 3.0)).asDiagonal();
  const auto w = solve_weights(V);
  const double inv = 1.0 + 0.5 + 1.0 / 3.0;
  CHECK(w.combined_variance == doctest::Approx(1.0 / inv).epsilon(1e-14));
  CHECK(w.weights[0] == doctest::Approx(1.0 / inv).epsilon(1e-14));
  CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights match the explicit-inverse oracle") {
  std::mt19937_64 rng(11);
  for (Index n = 1; n <= 8; ++n) {
    const Matrix V = oracle::random_pd(n, rng);
    const auto w = solve_weights(V);
    const Vector ref = oracle::dense_weights(V);
    CHECK((w.weights - ref).norm() <= 1e-10 * ref.norm());
    const double ref_var = 1.0 / V.inverse().sum();
    CHECK(w.combined_variance == doctest::Approx(ref_var).epsilon(1e-10));
  }
}

TEST_CASE("nested combined variances never increase") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 1 + rep % 8;
    const Matrix V = oracle::random_pd(n, rng);
    const auto seq = nested_combined_variances(V);
    for (std::size_t k = 1; k < seq.size(); ++k) CHECK(seq[k] <= seq[k - 1] + 1e-12);
  }
}

TEST_CASE("degenerate structure collapses to the last diagonal") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + rep % 7;
    Vector d(n);
    d[0] = 1.0 + ud(rng);
    for (Index i = 1; i < n; ++i) d[i] = d[i - 1] * ud(rng);
    const Matrix V = oracle::degenerate_structured(d);
    CHECK(check_degenerate_collapse(V) == doctest::Approx(d[n - 1]).epsilon(1e-8));
    const auto w = solve_weights(V);
    CHECK(std::abs(w.weights[n - 1] - 1.0) < 1e-6);
  }
  Matrix bad = oracle::degenerate_structured(Vector::LinSpaced(3, 3.0, 1.0));
  bad(0, 2) = bad(2, 0) = 0.5;
  CHECK_THROWS_AS(check_degenerate_collapse(bad), PreconditionError);
}

TEST_CASE("singular covariance escalates the jitter ladder") {
  // Two identical measurements: rank one, solvable only after jitter.
  Matrix V(2, 2);
  V << 1.0, 1.0, 1.0, 1.0;
  const auto w = solve_weights(V);
  CHECK(w.jitter > 0.0);
  CHECK(w.combined_variance == doctest::Approx(1.0).epsilon(1e-12));

  Matrix neg(2, 2);
  neg << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(solve_weights(neg), SingularCovarianceError);
}

TEST_CASE("structured fallback for an indefinite degenerate matrix") {
  // Later diagonal larger than the earlier one makes the structure indefinite.
  Matrix V(2, 2);
  V << 1.0, 1.2, 1.2, 1.2;
  CHECK_THROWS_AS(solve_weights(V), SingularCovarianceError);
  const auto w = solve_weights_structured(V);
  CHECK(w.latest_only);
  CHECK(w.weights[1] == 1.0);
  CHECK(w.combined_variance == 1.2);

  Matrix other(2, 2);
  other << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(solve_weights_structured(other), SingularCovarianceError);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(solve_weights(Matrix(2, 3)), DimensionError);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_weights(nan), DomainError);
  CHECK_THROWS_AS(combine(Matrix::Zero(4, 3), Matrix::Identity(2, 2)), DimensionError);
}

TEST_CASE("combine applies the weights to the columns") {
  Matrix X(3, 2);
  X << 1.0, 3.0, 2.0, 2.0, 0.0, 4.0;
  Matrix V(2, 2);
  V << 1.0, 0.0, 0.0, 1.0;
  const auto s = combine(X, V);
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.mean[2] == doctest::Approx(2.0));
  CHECK(s.variance == doctest::Approx(0.5));
}
