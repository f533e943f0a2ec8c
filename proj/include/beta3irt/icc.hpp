#pragma once

#include <string_view>

#include "beta3irt/types.hpp"

namespace beta3irt {

/// Shape regimes of the Beta item characteristic curve, by discrimination:
/// a>1 sigmoid, a=1 parabolic, 0<a<1 anti-sigmoid, a=0 flat, and the
/// decreasing mirror images for negative a.
enum class IccRegime {
  kSigmoid,
  kParabolic,
  kAntiSigmoid,
  kFlat,
  kDecreasingAntiSigmoid,
  kDecreasingParabolic,
  kDecreasingSigmoid,
};

std::string_view to_string(IccRegime regime);

/// Response-distribution shapes alpha = (theta/delta)^a and
/// beta = ((1-theta)/(1-delta))^a, computed in log space.
BetaShape beta_shape(Ability theta, Difficulty delta, Discrimination a);

/// Expected response E[p] = alpha / (alpha + beta), which reduces to
/// logistic(a * (logit(theta) - logit(delta))).
double icc_beta3(Ability theta, Difficulty delta, Discrimination a);

/// Raw-value overload used by the fitters; preconditions as the typed one.
double icc_beta3(double theta, double delta, double a);

/// Slope of the Beta ICC at theta = delta: a / (4 delta (1 - delta)).
double icc_slope_at_difficulty(Difficulty delta, Discrimination a);

/// Boundary comparisons are exact; apply tolerance at the call site if needed.
IccRegime icc_regime(Discrimination a);

/// Logistic ICC on unbounded scales: 1 / (1 + exp(-a (theta - delta))).
double icc_2plnd(double theta, double delta, Discrimination a);

/// Invert the Beta ICC for ability from an expected response:
/// logit(theta) = logit(p_bar) / a + logit(delta).
/// Throws ZeroDiscrimination when a = 0 and DegenerateResponse when p_bar
/// sits on {0, 1}.
Ability ability_from_expected_response(double p_bar, Difficulty delta,
                                       Discrimination a);

/// Beta log density at p in (0, 1); throws DegenerateResponse on the boundary.
double beta_log_density(double p, const BetaShape& shape);

}  // namespace beta3irt
