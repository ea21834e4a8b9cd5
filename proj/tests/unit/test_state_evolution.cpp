#include <doctest.h>

#include <cmath>

#include "lmoamp/errors.hpp"
#include "lmoamp/sensing.hpp"
#include "lmoamp/state_evolution.hpp"

using namespace lmoamp;

namespace {

SpectrumInput cond_spectrum(Index N, double delta, double kappa) {
  const Index M = Index(std::lround(delta * double(N)));
  return {cond_controlled_eigenvalues(M, N, kappa), delta};
}

const PriorModel kBG = PriorModel::bernoulli_gaussian(0.1);

}  // namespace

TEST_CASE("conventional recursion by hand on a flat spectrum") {
  // delta = 1/2: half the eigenvalues equal 2, the rest vanish.
  const SpectrumInput sp = cond_spectrum(200, 0.5, 1.0);
  const double s2 = 0.01;
  const auto se = se_oamp(sp, kBG, s2, 12);
  REQUIRE(se.iterations() == 12);
  double v = 1.0;
  for (int t = 0; t < 12; ++t) {
    const double post_a = 0.5 * v * s2 / (s2 + 2.0 * v) + 0.5 * v;
    const double v_ab = 1.0 / (1.0 / post_a - 1.0 / v);
    const double post_b = mmse(v_ab, kBG);
    CHECK(se.post_a[t] == doctest::Approx(post_a).epsilon(1e-12));
    CHECK(se.xi_a[t] == doctest::Approx(post_a / v).epsilon(1e-12));
    CHECK(se.v_ab[t] == doctest::Approx(v_ab).epsilon(1e-12));
    CHECK(se.post_b[t] == doctest::Approx(post_b).epsilon(1e-10));
    v = 1.0 / (1.0 / post_b - 1.0 / v_ab);
    CHECK(se.v_ba[t] == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("gaussian prior on a square flat spectrum reaches its fixed point at once") {
  const SpectrumInput sp = cond_spectrum(50, 1.0, 1.0);
  const double s2 = 0.3;
  const auto se = se_oamp(sp, PriorModel::gaussian(), s2, 5);
  for (int t = 0; t < 5; ++t) {
    CHECK(se.v_ab[t] == doctest::Approx(s2).epsilon(1e-12));
    CHECK(se.post_b[t] == doctest::Approx(s2 / (1.0 + s2)).epsilon(1e-12));
  }
  REQUIRE(se.fixed_point);
  CHECK(se.fixed_point->iteration == 1);
}

TEST_CASE("long-memory recursion reduces to the conventional one") {
  for (double kappa : {1.0, 1000.0})
    for (double delta : {0.5, 1.0}) {
      const SpectrumInput sp = cond_spectrum(400, delta, kappa);
      const double s2 = sigma2_from_snr_db(25.0, delta);
      const auto lm = se_lm_oamp(sp, kBG, s2, 20);
      const auto oa = se_oamp(sp, kBG, s2, 20);
      const auto rep = equivalence_report(lm, oa);
      CHECK_FALSE(rep.config_mismatch);
      CHECK(rep.max_gap <= 1e-8);
      CHECK(rep.max_offdiag_spread <= 1e-10);
      CHECK(rep.pass);
      CHECK(lm.post_b_matrix.rows() == 20);
      CHECK((lm.post_b_matrix - lm.post_b_matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
      for (int t = 1; t < 20; ++t) CHECK(lm.post_b[t] <= lm.post_b[t - 1] + 1e-12);
      for (int t = 0; t < 20; ++t) {
        CHECK(lm.xi_a[t] > 0.0);
        CHECK(lm.xi_a[t] < 1.0);
        CHECK(lm.xi_b[t] > 0.0);
        CHECK(lm.xi_b[t] < 1.0);
      }
    }
}

TEST_CASE("equivalence report flags mismatched configurations") {
  const SpectrumInput sp = cond_spectrum(100, 0.5, 10.0);
  const auto lm = se_lm_oamp(sp, kBG, 0.01, 5);
  const auto oa = se_oamp(sp, kBG, 0.02, 5);
  const auto rep = equivalence_report(lm, oa);
  CHECK(rep.config_mismatch);
  CHECK_FALSE(rep.pass);

  const auto other = se_oamp(cond_spectrum(100, 0.5, 20.0), kBG, 0.01, 5);
  CHECK(equivalence_report(lm, other).config_mismatch);
}

TEST_CASE("fixed point detection") {
  const SpectrumInput sp = cond_spectrum(100, 0.5, 10.0);
  CHECK_FALSE(se_oamp(sp, kBG, 0.01, 1).fixed_point);
  const auto se = se_oamp(sp, kBG, 0.001, 80);
  REQUIRE(se.fixed_point);
  const int t = se.fixed_point->iteration;
  CHECK(t >= 1);
  CHECK(std::abs(se.post_b[t] - se.post_b[t - 1]) < kFixedPointTol);
  CHECK(se.fixed_point->value == se.post_b[t]);
  const auto loose = fixed_point(se, 1e-3);
  REQUIRE(loose);
  CHECK(loose->iteration <= t);
}

TEST_CASE("overwhelming noise leaves the prior variance") {
  const SpectrumInput sp = cond_spectrum(100, 0.5, 10.0);
  const auto se = se_oamp(sp, kBG, 1e6, 3);
  CHECK(se.post_b[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("spectrum validation") {
  SpectrumInput sp = cond_spectrum(40, 0.5, 5.0);
  CHECK_NOTHROW(sp.validate());
  const auto d = sp.digest();
  CHECK(d == cond_spectrum(40, 0.5, 5.0).digest());
  CHECK(d != cond_spectrum(40, 0.5, 6.0).digest());

  SpectrumInput scaled = sp;
  scaled.eigenvalues *= 1.1;
  CHECK_THROWS_AS(scaled.validate(), DomainError);
  SpectrumInput negative = sp;
  negative.eigenvalues[0] += sp.eigenvalues[1] + 1e-3;  // same mean, one entry below zero
  negative.eigenvalues[1] = -1e-3;
  CHECK_THROWS_AS(negative.validate(), DomainError);
  CHECK_THROWS_AS(se_oamp(scaled, kBG, 0.1, 3), DomainError);
}
