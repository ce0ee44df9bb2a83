#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/rng.hpp"
#include "nhpp_sched/sampler.hpp"
#include "nhpp_sched/task_batch.hpp"

namespace nhpp_sched {

/// One realization of the batch completion time.
struct SimOutcome {
  double makespan = 0.0;
  /// Restarts suffered by the task at each processing position.
  std::vector<std::uint64_t> restarts_per_task;

  std::uint64_t total_restarts() const;
};

struct SimOptions {
  SamplingMethod method = SamplingMethod::Inversion;
  std::uint64_t restart_cap = 1'000'000;
};

/// Preempt-repeat makespan of `perm` applied to `batch`: a disruption during a
/// task discards its progress and the task starts over from the disruption
/// time. Throws DivergenceError when one task exceeds the restart cap.
SimOutcome simulate_makespan(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                             RngStream& rng, const SimOptions& options = {});

/// At-most-one-failure variant: only the first arrival of the process counts.
SimOutcome simulate_single_failure(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                                   RngStream& rng, const SimOptions& options = {});

/// Single-failure makespan when the (only) failure happens at `failure_time`.
SimOutcome single_failure_outcome(std::span<const double> seq, double failure_time);

/// Preempt-repeat makespan for a fixed ascending arrival path. Arrivals past
/// the end of the path are taken to be absent.
SimOutcome makespan_from_arrivals(std::span<const double> seq, std::span<const double> arrivals);

struct MakespanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replications = 0;
  double mean_restarts = 0.0;
  std::uint64_t max_restarts = 0;
  double max_makespan = 0.0;
};

enum class SimVariant { PreemptRepeat, SingleFailure };

struct EstimateOptions {
  std::uint64_t replications = 100'000;
  std::uint64_t seed = 20240601;
  /// 0 picks default_thread_count().
  unsigned threads = 0;
  SimOptions sim;
  SimVariant variant = SimVariant::PreemptRepeat;
};

/// Replication r always uses RngStream(seed, r), so the estimate does not
/// depend on the worker count.
MakespanEstimate estimate_makespan(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                                   const EstimateOptions& options);

/// NHPP_SCHED_THREADS when set, otherwise the hardware concurrency.
unsigned default_thread_count();

}  // namespace nhpp_sched
