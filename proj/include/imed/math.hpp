#pragma once

#include <cmath>

namespace imed {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

/// Numerically stable inverse logit.
inline double expit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Normal density with mean mu and variance var (var > 0).
inline double normal_pdf(double x, double mu, double var) {
  const double z = (x - mu);
  return kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * z * z / var);
}

}  // namespace imed
