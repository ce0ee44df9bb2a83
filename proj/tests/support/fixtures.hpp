#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nhpp_sched/rate_model.hpp"

namespace nhpp_test {

using nhpp_sched::RateModel;

/// One representative of every rate kind.
inline std::vector<std::pair<std::string, RateModel>> every_kind() {
  return {
      {"constant", RateModel::constant(0.4)},
      {"linear-increasing", RateModel::linear_increasing(0.4, 0.04)},
      {"concave-increasing", RateModel::concave_increasing(0.4, 0.1)},
      {"step-increasing", RateModel::step_increasing(0.4, 5.0)},
      {"linear-decreasing", RateModel::linear_decreasing(0.4, 0.03, 0.1)},
      {"convex-decreasing", RateModel::convex_decreasing()},
      {"step-decreasing", RateModel::step_decreasing(0.4, 5.0)},
      {"sinusoidal", RateModel::sinusoidal(0.4, 0.5)},
      {"bathtub", RateModel::bathtub(0.4, 0.04, 5.0, 10.0, 15.0)},
      {"zero-then-constant", RateModel::zero_then_constant(2.0, 1.0)},
      {"two-phase-constant", RateModel::two_phase_constant(0.5, 1.0, 1.0)},
      {"piecewise-constant", RateModel::piecewise_constant({1.0, 3.0, 4.0}, {0.2, 0.0, 0.7, 0.3})},
      {"exponential", RateModel::exponential(0.5, -0.2, 12.0)},
      {"polynomial", RateModel::polynomial(0.1, 0.05, 0.01, 8.0)},
  };
}

/// Two-sample Kolmogorov-Smirnov distance. Infinite values are allowed and
/// compare equal to each other.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double rel_diff(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

}  // namespace nhpp_test
