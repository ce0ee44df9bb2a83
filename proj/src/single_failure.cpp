#include "nhpp_sched/single_failure.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nhpp_sched/error.hpp"
#include "nhpp_sched/quadrature.hpp"

namespace nhpp_sched {

namespace {

// Sum over positions of a_k * F(A_k) in processing order.
double weighted_cdf_sum(const RateModel& model, std::span<const double> seq) {
  double prefix = 0.0;
  double sum = 0.0;
  for (double a : seq) {
    prefix += a;
    sum += a * first_failure_cdf(model, prefix);
  }
  return sum;
}

}  // namespace

std::string_view density_shape_name(DensityShape s) {
  switch (s) {
    case DensityShape::StrictlyDecreasing: return "strictly-decreasing";
    case DensityShape::StrictlyIncreasing: return "strictly-increasing";
    case DensityShape::Neither: return "neither";
  }
  return "neither";
}

double first_failure_density(const RateModel& model, double t) {
  return model.rate(t) * std::exp(-model.cumulative(t));
}

double first_failure_cdf(const RateModel& model, double x) { return -std::expm1(-model.cumulative(x)); }

DensityShape density_monotonicity(const RateModel& model, double horizon, std::size_t probes) {
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "density_monotonicity: horizon must be > 0");
  if (probes < 2) fail(ErrorCode::InvalidArgument, "density_monotonicity: need at least 2 probes");
  const auto& mono = model.metadata().monotonicity;
  const bool non_increasing = mono.direction == Direction::NonIncreasing || mono.direction == Direction::Constant;
  // A positive non-increasing rate times a strictly decreasing survival.
  if (non_increasing && model.rate(horizon) > 0.0) return DensityShape::StrictlyDecreasing;

  bool has_jump = false;
  for (double x : model.breakpoints())
    if (x > 0.0 && x < horizon && model.rate_left(x) != model.rate(x)) has_jump = true;

  bool all_neg = true;
  bool all_pos = true;
  const double step = horizon / static_cast<double>(probes - 1);
  if (!has_jump) {
    // p' = (lambda' - lambda^2) e^{-Lambda}
    for (std::size_t i = 0; i < probes; ++i) {
      const double t = std::min(horizon, static_cast<double>(i) * step);
      const double lam = model.rate(t);
      const double g = lam > 0.0 ? model.derivative(t) - lam * lam : 0.0;
      all_neg = all_neg && g < 0.0;
      all_pos = all_pos && g > 0.0;
    }
  } else {
    double prev = first_failure_density(model, 0.0);
    for (std::size_t i = 1; i < probes; ++i) {
      const double p = first_failure_density(model, std::min(horizon, static_cast<double>(i) * step));
      all_neg = all_neg && p < prev;
      all_pos = all_pos && p > prev;
      prev = p;
    }
  }
  if (all_neg) return DensityShape::StrictlyDecreasing;
  if (all_pos) return DensityShape::StrictlyIncreasing;
  return DensityShape::Neither;
}

SingleFailureResult expected_makespan_single_failure(const RateModel& model, const TaskBatch& batch,
                                                     const Permutation& perm) {
  const auto seq = sequence(batch, perm);
  const double total = batch.total();
  const auto breaks = model.breakpoints();
  auto density = [&](double s) { return first_failure_density(model, s); };

  SingleFailureResult res;
  res.permutation = perm;
  if (seq.empty()) return res;
  const double survive = std::exp(-model.cumulative(total));

  // Failure inside task k's window restarts it and the rest runs clean.
  double direct = total * survive;
  double start = 0.0;
  for (double a : seq) {
    const double rest = total - start;
    direct += integrate([&](double s) { return density(s) * (s + rest); }, start, start + a, breaks, 1e-13);
    start += a;
  }
  res.expected_makespan = direct;

  const double base = integrate([&](double s) { return density(s) * (s + total); }, 0.0, total, breaks, 1e-13);
  res.rearranged =
      total * survive + base + weighted_cdf_sum(model, seq) - total * first_failure_cdf(model, total);
  res.density_shape = density_monotonicity(model, total);
  return res;
}

double pairwise_difference(const RateModel& model, const TaskBatch& batch, const Permutation& perm) {
  batch.require_ascending("pairwise_difference");
  const auto seq = sequence(batch, perm);
  return weighted_cdf_sum(model, batch.lengths()) - weighted_cdf_sum(model, seq);
}

}  // namespace nhpp_sched
