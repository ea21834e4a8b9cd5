#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lmoamp/quadrature.hpp"

using namespace lmoamp;

TEST_CASE("kronrod and gauss weights integrate constants on [-1, 1]") {
  using R = GaussKronrod15;
  double k = R::kronrod[7], g = R::gauss[3];
  for (int i = 0; i < 7; ++i) k += 2.0 * R::kronrod[i];
  for (int i = 0; i < 3; ++i) g += 2.0 * R::gauss[i];
  CHECK(k == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("normal expectation reproduces moments") {
  const NormalExpectation expect{};
  CHECK(expect(0.0, 1.0, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(expect(0.0, 1.0, [](double z) { return z; })) < 1e-14);
  CHECK(expect(0.0, 1.0, [](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expect(0.0, 1.0, [](double z) { return z * z * z * z; }) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(expect(1.5, 2.0, [](double y) { return y * y; }) == doctest::Approx(6.25).epsilon(1e-12));
  CHECK(expect(0.0, 1.0, [](double z) { return std::cos(z); }) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("normal expectation resolves a narrow step") {
  // P(Z > 0.1) through a steep logistic; the exact answer is the normal tail.
  const NormalExpectation expect{};
  const double sharp = expect(0.0, 1.0, [](double z) { return 1.0 / (1.0 + std::exp(-(z - 0.1) * 1e4)); });
  CHECK(sharp == doctest::Approx(0.5 * std::erfc(0.1 / std::sqrt(2.0))).epsilon(1e-8));

  // A narrow bump away from the origin: E[exp(-(Z - 3)^2 / (2 s^2))] in closed form.
  const double s = 0.01;
  const double bump = expect(0.0, 1.0, [&](double z) { return std::exp(-0.5 * (z - 3.0) * (z - 3.0) / (s * s)); });
  const double exact = s / std::sqrt(1.0 + s * s) * std::exp(-0.5 * 9.0 / (1.0 + s * s));
  CHECK(bump == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("normal expectation is deterministic") {
  const NormalExpectation expect{};
  auto f = [](double y) { return std::tanh(40.0 * y) * y; };
  CHECK(expect(0.2, 0.7, f) == expect(0.2, 0.7, f));
}
