#pragma once

#include <cmath>

namespace beta3irt {

/// logistic(x) = 1 / (1 + exp(-x)), evaluated without overflow for any finite x.
inline double logistic(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

/// logit(p) = log(p / (1 - p)) for p in (0, 1).
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// log logistic(x) = -softplus(-x); stays finite for any finite x.
inline double log_logistic(double x) { return -softplus(-x); }

/// log B(a, b) via log-Gamma.
inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Digamma function for x > 0. Recurrence below 6, asymptotic series above.
double digamma(double x);

}  // namespace beta3irt
