#include <doctest.h>

#include <random>

#include "lmoamp/errors.hpp"
#include "lmoamp/module_b.hpp"
#include "lmoamp/sensing.hpp"

using namespace lmoamp;

TEST_CASE("gaussian prior closed form") {
  const Vector r = Vector::LinSpaced(6, -2.0, 3.0);
  const auto d = denoise_posterior(r, 1.0, PriorModel::gaussian());
  CHECK((d.mean - r / 2.0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(d.avg_variance == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.xi_b == doctest::Approx(0.5).epsilon(1e-15));

  const auto z = denoise_posterior(Vector::Zero(5), 0.3, PriorModel::bernoulli_gaussian(0.1));
  CHECK(z.mean.isZero(0.0));
}

TEST_CASE("averaged posterior variance is consistent with mmse") {
  const auto prior = PriorModel::bernoulli_gaussian(0.1);
  const Index N = 100000;
  const double v = 0.05;
  const Vector x = gen_signal(N, prior, 3);
  const Vector r = x + gen_noise(N, v, 4);
  const auto d = denoise_posterior(r, v, prior);

  Vector vars(N), derivs(N);
  for (Index n = 0; n < N; ++n) {
    const auto e = denoise(r[n], v, prior);
    vars[n] = e.variance;
    derivs[n] = e.derivative;
  }
  auto stderr_of = [&](const Vector& a) {
    return std::sqrt((a.array() - a.mean()).square().sum() / double(N - 1) / double(N));
  };
  const double target = mmse(v, prior);
  CHECK(std::abs(d.avg_variance - target) <= 3.0 * stderr_of(vars));
  CHECK(std::abs(d.xi_b - target / v) <= 3.0 * stderr_of(derivs));
  CHECK(d.xi_b > 0.0);
  CHECK(d.xi_b < 1.0);
  CHECK(d.avg_variance > 0.0);
  CHECK(d.avg_variance < 1.0);
  // the estimate is close to the realized error too
  const double realized = (d.mean - x).squaredNorm() / double(N);
  CHECK(std::abs(realized - target) <= 0.05 * target);
}

TEST_CASE("posterior covariance row") {
  CHECK(posterior_cov_row(0.2, {0.5}).size() == 1);
  const Vector row = posterior_cov_row(0.2, {0.9, 0.5, 0.3});
  CHECK(row.size() == 3);
  CHECK((row.array() == 0.2).all());
}

TEST_CASE("extrinsic B message") {
  const Vector post = Vector::LinSpaced(4, 0.1, 0.4);
  const SufficientStatistic<double> suf{Vector::LinSpaced(4, 1.0, 2.0), 0.5, {}};
  const Vector v_post = Vector::Constant(2, 0.2);

  const auto none = extrinsic_b(post, suf, 0.0, {0.0, 0.0}, v_post, Vector::Constant(2, 0.5));
  CHECK(none.mean == post);
  CHECK(none.cov_row.size() == 3);

  const double xi = 0.4;
  const auto ext = extrinsic_b(post, suf, xi, {0.3, xi}, v_post, Vector::Constant(2, 0.5));
  CHECK(ext.cov_row[0] == doctest::Approx(0.2 / 0.6).epsilon(1e-15));
  CHECK(ext.cov_row[2] == doctest::Approx((0.2 - xi * xi * 0.5) / (0.6 * 0.6)).epsilon(1e-15));
  CHECK(ext.cov_row[2] > 0.2);

  CHECK_THROWS_AS(extrinsic_b(post, suf, 1.0 - 1e-13, {0.0, 0.0}, v_post, Vector::Constant(2, 0.5)), DegenerateError);
}

TEST_CASE("Onsager identity for module B against the literal sum") {
  Matrix X(4, 2);
  X << 1.5, 1.1, -0.2, -0.1, 0.0, 0.4, 2.5, 2.2;
  MessageHistory from_a;
  from_a.push(X.col(0), Vector::Constant(1, 0.9), 0.5);
  from_a.push(X.col(1), (Vector(2) << 0.5, 0.6).finished(), 0.4);
  const auto suf = from_a.combine();
  const double xi = 0.27;
  const Vector post = Vector::LinSpaced(4, 0.5, -0.5);
  Vector literal = post;
  for (Index t = 0; t < 2; ++t) literal -= xi * suf.weights.weights[t] * X.col(t);
  literal /= (1.0 - xi);
  CHECK((onsager_mean(post, suf.mean, xi) - literal).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("one step equals the conventional OAMP nonlinear step") {
  const auto prior = PriorModel::bernoulli_gaussian(0.2);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const Index N = 200;
  const double v = 0.3;
  const Vector r = Vector::NullaryExpr(N, [&](Index) { return 2.0 * nd(rng); });

  MessageHistory from_a, to_a;
  from_a.push(r, Vector::Constant(1, v), 0.4);
  to_a.push(Vector::Zero(N), Vector::Constant(1, 1.0), 0.0);
  const ModuleBIterate it = module_b_step(from_a, to_a, prior, {});

  Vector f(N);
  double var = 0.0, der = 0.0;
  for (Index n = 0; n < N; ++n) {
    f[n] = posterior_mean(r[n], v, prior);
    var += posterior_variance(r[n], v, prior) / double(N);
    der += posterior_mean_derivative(r[n], v, prior) / double(N);
  }
  const Vector ext = (f - der * r) / (1.0 - der);
  const double v_ext = (var - der * der * v) / ((1.0 - der) * (1.0 - der));

  CHECK((it.posterior_mean - f).norm() <= 1e-12 * f.norm());
  CHECK(std::abs(it.xi_b - der) <= 1e-12);
  CHECK((it.extrinsic.mean - ext).norm() <= 1e-10 * ext.norm());
  REQUIRE(it.extrinsic.cov_row.size() == 2);
  CHECK(std::abs(it.extrinsic.cov_row[1] - v_ext) <= 1e-10 * v_ext);
  CHECK(std::abs(it.extrinsic.cov_row[0] - var / (1.0 - der)) <= 1e-12);
}

TEST_CASE("extrinsic variance exceeds the posterior variance") {
  const Index N = 50;
  const double v = 0.8;
  MessageHistory from_a, to_a;
  from_a.push(Vector::LinSpaced(N, -1.0, 1.0), Vector::Constant(1, v), 0.3);
  to_a.push(Vector::Zero(N), Vector::Constant(1, 1.0), 0.0);
  const auto it = module_b_step(from_a, to_a, PriorModel::bernoulli_gaussian(0.5), {});
  const double v_post = it.posterior_cov_row[0];
  CHECK(it.extrinsic.cov_row[1] > v_post);
}
