#pragma once

#include <string_view>

#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/task_batch.hpp"

namespace nhpp_sched {

enum class DensityShape { StrictlyDecreasing, StrictlyIncreasing, Neither };

std::string_view density_shape_name(DensityShape s);

/// Density of the first arrival, lambda(t) e^{-Lambda(0,t)}.
double first_failure_density(const RateModel& model, double t);

/// P(first arrival <= x) = 1 - e^{-Lambda(0,x)}.
double first_failure_cdf(const RateModel& model, double x);

/// Shape of the first-failure density on [0, horizon]. Positive non-increasing
/// rates are classified analytically; smooth rates by the sign of
/// lambda' - lambda^2 on a probe grid; rates with jumps by density differences.
DensityShape density_monotonicity(const RateModel& model, double horizon, std::size_t probes = 10'000);

struct SingleFailureResult {
  /// Expected makespan from direct quadrature of the window integrals.
  double expected_makespan = 0.0;
  /// Same quantity through the rearranged form with closed-form CDF terms.
  double rearranged = 0.0;
  Permutation permutation;
  DensityShape density_shape = DensityShape::Neither;
};

SingleFailureResult expected_makespan_single_failure(const RateModel& model, const TaskBatch& batch,
                                                     const Permutation& perm);

/// R(identity) - R(perm) for a batch in ascending order, from the weighted
/// CDF sums only.
double pairwise_difference(const RateModel& model, const TaskBatch& batch, const Permutation& perm);

}  // namespace nhpp_sched
