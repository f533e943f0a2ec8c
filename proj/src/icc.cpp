#include "beta3irt/icc.hpp"

#include <cmath>

#include "beta3irt/errors.hpp"
#include "beta3irt/math.hpp"

namespace beta3irt {

std::string_view to_string(IccRegime regime) {
  switch (regime) {
    case IccRegime::kSigmoid: return "sigmoid";
    case IccRegime::kParabolic: return "parabolic";
    case IccRegime::kAntiSigmoid: return "anti_sigmoid";
    case IccRegime::kFlat: return "flat";
    case IccRegime::kDecreasingAntiSigmoid: return "decreasing_anti_sigmoid";
    case IccRegime::kDecreasingParabolic: return "decreasing_parabolic";
    case IccRegime::kDecreasingSigmoid: return "decreasing_sigmoid";
  }
  return "unknown";
}

BetaShape beta_shape(Ability theta, Difficulty delta, Discrimination a) {
  const double log_alpha =
      a.value() * (std::log(theta.value()) - std::log(delta.value()));
  const double log_beta =
      a.value() * (std::log1p(-theta.value()) - std::log1p(-delta.value()));
  return BetaShape(std::exp(log_alpha), std::exp(log_beta));
}

double icc_beta3(double theta, double delta, double a) {
  return logistic(a * (logit(theta) - logit(delta)));
}

double icc_beta3(Ability theta, Difficulty delta, Discrimination a) {
  return icc_beta3(theta.value(), delta.value(), a.value());
}

double icc_slope_at_difficulty(Difficulty delta, Discrimination a) {
  return a.value() / (4.0 * delta.value() * (1.0 - delta.value()));
}

IccRegime icc_regime(Discrimination a) {
  const double v = a.value();
  if (v > 1.0) return IccRegime::kSigmoid;
  if (v == 1.0) return IccRegime::kParabolic;
  if (v > 0.0) return IccRegime::kAntiSigmoid;
  if (v == 0.0) return IccRegime::kFlat;
  if (v > -1.0) return IccRegime::kDecreasingAntiSigmoid;
  if (v == -1.0) return IccRegime::kDecreasingParabolic;
  return IccRegime::kDecreasingSigmoid;
}

double icc_2plnd(double theta, double delta, Discrimination a) {
  return logistic(a.value() * (theta - delta));
}

Ability ability_from_expected_response(double p_bar, Difficulty delta,
                                       Discrimination a) {
  if (!(p_bar > 0.0 && p_bar < 1.0)) {
    throw DegenerateResponse("expected response must lie strictly in (0, 1)");
  }
  if (a.value() == 0.0) {
    throw ZeroDiscrimination("flat ICC (a = 0) cannot be inverted for ability");
  }
  return Ability(logistic(logit(p_bar) / a.value() + logit(delta.value())));
}

double beta_log_density(double p, const BetaShape& shape) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DegenerateResponse("Beta density degenerates at the boundary of [0, 1]");
  }
  return (shape.alpha - 1.0) * std::log(p) +
         (shape.beta - 1.0) * std::log1p(-p) -
         log_beta_fn(shape.alpha, shape.beta);
}

}  // namespace beta3irt
