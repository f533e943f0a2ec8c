#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "beta3irt/errors.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/math.hpp"
#include "beta3irt/rng.hpp"
#include "beta3irt/types.hpp"

using namespace beta3irt;

TEST_CASE("unit-interval types reject out-of-range values") {
  CHECK_NOTHROW(Ability(0.5));
  CHECK_NOTHROW(Ability(1e-6));
  CHECK_NOTHROW(Ability(1.0 - 1e-6));
  CHECK_THROWS_AS(Ability(0.0), InvalidParameter);
  CHECK_THROWS_AS(Ability(1.0), InvalidParameter);
  CHECK_THROWS_AS(Ability(1e-7), InvalidParameter);
  CHECK_THROWS_AS(Difficulty(-0.1), InvalidParameter);
  CHECK_THROWS_AS(Discrimination(std::numeric_limits<double>::infinity()),
                  InvalidParameter);
  CHECK_THROWS_AS(BetaShape(0.0, 1.0), InvalidParameter);
}

TEST_CASE("beta_shape worked examples") {
  const BetaShape mid = beta_shape(Ability(0.5), Difficulty(0.5), Discrimination(1));
  CHECK(mid.alpha == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mid.beta == doctest::Approx(1.0).epsilon(1e-14));

  const BetaShape skew = beta_shape(Ability(0.8), Difficulty(0.2), Discrimination(1));
  CHECK(skew.alpha == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(skew.beta == doctest::Approx(0.25).epsilon(1e-13));

  const BetaShape inverted =
      beta_shape(Ability(0.8), Difficulty(0.2), Discrimination(-1));
  CHECK(inverted.alpha == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(inverted.beta == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("icc_beta3 worked examples") {
  CHECK(icc_beta3(Ability(0.37), Difficulty(0.37), Discrimination(3.2)) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(icc_beta3(Ability(0.8), Difficulty(0.2), Discrimination(1)) ==
        doctest::Approx(4.0 / 4.25).epsilon(1e-13));
  // a = 0 flattens the curve.
  CHECK(icc_beta3(Ability(0.3), Difficulty(0.7), Discrimination(0)) == 0.5);
}

TEST_CASE("icc slope at difficulty") {
  CHECK(icc_slope_at_difficulty(Difficulty(0.5), Discrimination(1)) ==
        doctest::Approx(1.0));
  CHECK(icc_slope_at_difficulty(Difficulty(0.5), Discrimination(2)) ==
        doctest::Approx(2.0));
  CHECK(icc_slope_at_difficulty(Difficulty(0.2), Discrimination(1)) ==
        doctest::Approx(1.5625));
}

TEST_CASE("icc regimes by discrimination") {
  CHECK(icc_regime(Discrimination(2)) == IccRegime::kSigmoid);
  CHECK(icc_regime(Discrimination(1)) == IccRegime::kParabolic);
  CHECK(icc_regime(Discrimination(0.5)) == IccRegime::kAntiSigmoid);
  CHECK(icc_regime(Discrimination(0)) == IccRegime::kFlat);
  CHECK(icc_regime(Discrimination(-0.5)) == IccRegime::kDecreasingAntiSigmoid);
  CHECK(icc_regime(Discrimination(-1)) == IccRegime::kDecreasingParabolic);
  CHECK(icc_regime(Discrimination(-2)) == IccRegime::kDecreasingSigmoid);
  CHECK(to_string(IccRegime::kAntiSigmoid) == "anti_sigmoid");
}

TEST_CASE("2PL-ND logistic curve") {
  CHECK(icc_2plnd(0.0, 0.0, Discrimination(1)) == doctest::Approx(0.5));
  CHECK(icc_2plnd(1.0, 0.0, Discrimination(1)) ==
        doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(icc_2plnd(1.0, 0.0, Discrimination(-1)) ==
        doctest::Approx(0.2689414213699951).epsilon(1e-14));
}

TEST_CASE("ability inversion examples and errors") {
  CHECK(ability_from_expected_response(0.5, Difficulty(0.3), Discrimination(2))
            .value() == doctest::Approx(0.3).epsilon(1e-12));
  const double p = icc_beta3(Ability(0.8), Difficulty(0.2), Discrimination(1));
  CHECK(ability_from_expected_response(p, Difficulty(0.2), Discrimination(1))
            .value() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(
      ability_from_expected_response(0.5, Difficulty(0.5), Discrimination(0)),
      ZeroDiscrimination);
  CHECK_THROWS_AS(
      ability_from_expected_response(0.0, Difficulty(0.5), Discrimination(1)),
      DegenerateResponse);
  CHECK_THROWS_AS(
      ability_from_expected_response(1.0, Difficulty(0.5), Discrimination(1)),
      DegenerateResponse);
}

TEST_CASE("beta log density") {
  CHECK(beta_log_density(0.5, BetaShape(1, 1)) == doctest::Approx(0.0));
  // Beta(2,2) density at 0.5 is 6 * 0.25 = 1.5.
  CHECK(beta_log_density(0.5, BetaShape(2, 2)) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-13));
  CHECK_THROWS_AS(beta_log_density(0.0, BetaShape(2, 2)), DegenerateResponse);
  CHECK_THROWS_AS(beta_log_density(1.0, BetaShape(2, 2)), DegenerateResponse);
}

TEST_CASE("midpoint invariant over random parameters") {
  Rng rng(1001);
  for (int k = 0; k < 10000; ++k) {
    const double v = 1e-5 + (1.0 - 2e-5) * rng.uniform();
    const double a = -20.0 + 40.0 * rng.uniform();
    CHECK(std::abs(icc_beta3(v, v, a) - 0.5) < 1e-12);
  }
}

TEST_CASE("icc equals alpha over alpha plus beta") {
  Rng rng(1002);
  for (int k = 0; k < 10000; ++k) {
    const double theta = 0.05 + 0.9 * rng.uniform();
    const double delta = 0.05 + 0.9 * rng.uniform();
    const double a = -8.0 + 16.0 * rng.uniform();
    const BetaShape shape =
        beta_shape(Ability(theta), Difficulty(delta), Discrimination(a));
    const double ratio = shape.alpha / (shape.alpha + shape.beta);
    const double curve = icc_beta3(theta, delta, a);
    CHECK(std::abs(ratio - curve) <= 1e-12 * std::max(ratio, curve));
  }
}

TEST_CASE("strict monotonicity in ability") {
  Rng rng(1003);
  for (int rep = 0; rep < 5; ++rep) {
    const double delta = 0.1 + 0.8 * rng.uniform();
    const double magnitude = 0.2 + 4.8 * rng.uniform();
    for (const double a : {magnitude, -magnitude}) {
      double previous = icc_beta3(1e-3, delta, a);
      for (int k = 1; k < 1000; ++k) {
        const double theta = 1e-3 + (1.0 - 2e-3) * k / 999.0;
        const double value = icc_beta3(theta, delta, a);
        if (a > 0) {
          CHECK(value > previous);
        } else {
          CHECK(value < previous);
        }
        previous = value;
      }
    }
  }
}

TEST_CASE("point symmetry of the Beta ICC") {
  Rng rng(1004);
  for (int k = 0; k < 10000; ++k) {
    const double theta = 1e-5 + (1.0 - 2e-5) * rng.uniform();
    const double delta = 1e-5 + (1.0 - 2e-5) * rng.uniform();
    const double a = -20.0 + 40.0 * rng.uniform();
    const double sum = icc_beta3(theta, delta, a) +
                       icc_beta3(1.0 - theta, 1.0 - delta, a);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("slope matches central finite difference at theta = delta") {
  Rng rng(1005);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const double delta = 0.05 + 0.9 * rng.uniform();
    double a = -5.0 + 10.0 * rng.uniform();
    if (std::abs(a) < 0.1) a = a < 0 ? -0.1 : 0.1;
    const double fd =
        (icc_beta3(delta + h, delta, a) - icc_beta3(delta - h, delta, a)) /
        (2.0 * h);
    const double slope = icc_slope_at_difficulty(Difficulty(delta), Discrimination(a));
    CHECK(std::abs(fd - slope) <= 1e-4 * std::abs(slope));
  }
}

TEST_CASE("inversion round-trips the curve") {
  // Saturated expected responses (within a few ulp of 0 or 1) carry too few
  // bits to invert; the identity is checked on the representable band.
  Rng rng(1006);
  int accepted = 0;
  while (accepted < 2000) {
    const double theta = 0.01 + 0.98 * rng.uniform();
    const double delta = 0.01 + 0.98 * rng.uniform();
    const double magnitude = 0.1 + 4.9 * rng.uniform();
    const double a = rng.uniform() < 0.5 ? magnitude : -magnitude;
    const double p = icc_beta3(theta, delta, a);
    if (p < 1e-5 || p > 1.0 - 1e-5) continue;
    ++accepted;
    const Ability recovered = ability_from_expected_response(
        p, Difficulty(delta), Discrimination(a));
    CHECK(std::abs(recovered.value() - theta) < 1e-10);
  }
}

TEST_CASE("2PL-ND slope at theta = delta is a quarter of the discrimination") {
  Rng rng(1007);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const double delta = -2.0 + 4.0 * rng.uniform();
    double a = -5.0 + 10.0 * rng.uniform();
    if (std::abs(a) < 0.1) a = a < 0 ? -0.1 : 0.1;
    const Discrimination disc(a);
    const double fd =
        (icc_2plnd(delta + h, delta, disc) - icc_2plnd(delta - h, delta, disc)) /
        (2.0 * h);
    CHECK(std::abs(fd - a / 4.0) <= 1e-4 * std::abs(a / 4.0));
  }
}

TEST_CASE("density integrates to one over the clipped support") {
  Rng rng(1008);
  constexpr double eps = 1e-6;
  constexpr int n = 1 << 20;
  for (int rep = 0; rep < 12; ++rep) {
    const double alpha = 0.5 + 4.5 * rng.uniform();
    const double beta = 0.5 + 4.5 * rng.uniform();
    const double log_norm = log_beta_fn(alpha, beta);
    auto density = [&](double p) {
      return std::exp((alpha - 1.0) * std::log(p) +
                      (beta - 1.0) * std::log1p(-p) - log_norm);
    };
    double integral = 0.0;
    const double h = (1.0 - 2.0 * eps) / n;
    double previous = density(eps);
    for (int k = 1; k <= n; ++k) {
      const double current = density(eps + k * h);
      integral += 0.5 * h * (previous + current);
      previous = current;
    }
    CHECK(integral >= 0.99);
    CHECK(integral <= 1.001);
  }
}
