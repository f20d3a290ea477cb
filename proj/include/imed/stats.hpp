#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "imed/error.hpp"

namespace imed {

/// Quantile with linear interpolation between order statistics
/// (R type 7): h = (n-1)p, result = x_(floor h) + frac(h) * diff.
inline double quantile_type7(std::vector<double> v, double p) {
  if (v.empty()) throw DataError("quantile of empty vector");
  if (p < 0.0 || p > 1.0) throw DataError("quantile level outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

/// Sample standard deviation, denominator n-1.
inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace imed
