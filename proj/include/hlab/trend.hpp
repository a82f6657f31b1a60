#pragma once

// Monotone-trend verdicts over study rows.

#include <cmath>
#include <string>
#include <vector>

#include "hlab/report.hpp"

namespace hlab {

/// Default per-step slack for trend assertions, relative to the previous value.
inline constexpr double kTrendSlack = 0.02;

/// x[i+1] < x[i] + slack*|x[i]| for every step. NaN entries fail.
inline bool decreasing(const std::vector<double>& x, double slack = kTrendSlack) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (!(x[i + 1] < x[i] + slack * std::abs(x[i]))) return false;
  }
  for (double v : x) {
    if (std::isnan(v)) return false;
  }
  return true;
}

/// x[i+1] > x[i] - slack*|x[i]| for every step. NaN entries fail.
inline bool increasing(const std::vector<double>& x, double slack = kTrendSlack) {
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  return decreasing(neg, slack);
}

inline std::vector<double> abs_values(std::vector<double> x) {
  for (double& v : x) v = std::abs(v);
  return x;
}

inline std::string join_numbers(const std::vector<double>& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? " " : "") + format_number(x[i]);
  return s;
}

/// max(x) <= factor * min(x) over x[skip:], for positive finite entries.
inline bool bounded_ratio(const std::vector<double>& x, double factor, std::size_t skip = 1) {
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = skip; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  if (x.size() <= skip) return true;
  return hi <= factor * lo;
}

}  // namespace hlab
