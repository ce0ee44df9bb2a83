#include "nhpp_sched/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kBlockSize = 1024;

[[noreturn]] void diverge(std::size_t position, double length, std::uint64_t cap, double local_mass) {
  std::ostringstream os;
  os << "task at position " << position + 1 << " (length " << length << ") exceeded " << cap
     << " restarts; expected attempts ~ e^{Lambda(t,t+a)} = " << std::exp(local_mass);
  throw DivergenceError(os.str(), position, std::exp(local_mass));
}

// Sequential moments of one block, merged in block order afterwards.
struct BlockStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double restart_sum = 0.0;
  std::uint64_t max_restarts = 0;
  double max_makespan = 0.0;

  void add(double x, std::uint64_t restarts) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
    restart_sum += static_cast<double>(restarts);
    max_restarts = std::max(max_restarts, restarts);
    max_makespan = std::max(max_makespan, x);
  }

  void merge(const BlockStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
    restart_sum += o.restart_sum;
    max_restarts = std::max(max_restarts, o.max_restarts);
    max_makespan = std::max(max_makespan, o.max_makespan);
  }
};

SimOutcome simulate_inversion(const RateModel& model, std::span<const double> seq, RngStream& rng,
                              std::uint64_t cap) {
  SimOutcome out;
  out.restarts_per_task.assign(seq.size(), 0);
  const double total = model.total_mass();
  double t = 0.0;
  double lam_t = 0.0;            // Lambda(0, t)
  double next = rng.exponential();  // Lambda(0, s) of the pending arrival s
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double a = seq[k];
    for (;;) {
      const double end = t + a;
      const double lam_end = model.cumulative(end);
      if (next >= lam_end || next >= total) {
        t = end;
        lam_t = lam_end;
        break;
      }
      if (++out.restarts_per_task[k] > cap) diverge(k, a, cap, lam_end - lam_t);
      t = model.inverse_cumulative(next);
      lam_t = next;
      next += rng.exponential();
    }
  }
  out.makespan = t;
  return out;
}

SimOutcome simulate_thinning(const RateModel& model, std::span<const double> seq, RngStream& rng,
                             std::uint64_t cap) {
  SimOutcome out;
  out.restarts_per_task.assign(seq.size(), 0);
  double t = 0.0;
  double next = next_arrival_thinning(model, 0.0, rng);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double a = seq[k];
    for (;;) {
      const double end = t + a;
      if (next >= end) {
        t = end;
        break;
      }
      if (++out.restarts_per_task[k] > cap) diverge(k, a, cap, model.cumulative(t, end));
      t = next;
      next = next_arrival_thinning(model, t, rng);
    }
  }
  out.makespan = t;
  return out;
}

}  // namespace

std::uint64_t SimOutcome::total_restarts() const {
  return std::accumulate(restarts_per_task.begin(), restarts_per_task.end(), std::uint64_t{0});
}

SimOutcome simulate_makespan(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                             RngStream& rng, const SimOptions& options) {
  const auto seq = sequence(batch, perm);
  return options.method == SamplingMethod::Inversion ? simulate_inversion(model, seq, rng, options.restart_cap)
                                                      : simulate_thinning(model, seq, rng, options.restart_cap);
}

SimOutcome single_failure_outcome(std::span<const double> seq, double failure_time) {
  SimOutcome out;
  out.restarts_per_task.assign(seq.size(), 0);
  double start = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double end = start + seq[k];
    if (failure_time < end) {
      // task k restarts at the failure, everything after runs undisturbed
      out.restarts_per_task[k] = 1;
      double rest = 0.0;
      for (std::size_t j = k; j < seq.size(); ++j) rest += seq[j];
      out.makespan = failure_time + rest;
      return out;
    }
    start = end;
  }
  out.makespan = start;
  return out;
}

SimOutcome simulate_single_failure(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                                   RngStream& rng, const SimOptions& options) {
  const auto seq = sequence(batch, perm);
  const double first = next_arrival(model, 0.0, options.method, rng);
  return single_failure_outcome(seq, first);
}

SimOutcome makespan_from_arrivals(std::span<const double> seq, std::span<const double> arrivals) {
  SimOutcome out;
  out.restarts_per_task.assign(seq.size(), 0);
  std::size_t idx = 0;
  double t = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    for (;;) {
      const double next = idx < arrivals.size() ? arrivals[idx] : kInf;
      const double end = t + seq[k];
      if (next >= end) {
        t = end;
        break;
      }
      ++out.restarts_per_task[k];
      t = next;
      ++idx;
    }
  }
  out.makespan = t;
  return out;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("NHPP_SCHED_THREADS")) {
    char* endp = nullptr;
    const long v = std::strtol(env, &endp, 10);
    if (endp != env && *endp == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MakespanEstimate estimate_makespan(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                                   const EstimateOptions& options) {
  if (options.replications < 2) fail(ErrorCode::InvalidArgument, "estimate_makespan: replications must be >= 2");
  const auto seq = sequence(batch, perm);
  const std::uint64_t reps = options.replications;
  const std::uint64_t blocks = (reps + kBlockSize - 1) / kBlockSize;
  std::vector<BlockStats> stats(blocks);

  std::atomic<std::uint64_t> next_block{0};
  std::mutex err_mu;
  std::uint64_t err_rep = std::numeric_limits<std::uint64_t>::max();
  std::exception_ptr err;

  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= blocks) return;
      BlockStats bs;
      const std::uint64_t lo = b * kBlockSize;
      const std::uint64_t hi = std::min(reps, lo + kBlockSize);
      for (std::uint64_t r = lo; r < hi; ++r) {
        RngStream rng(options.seed, r);
        try {
          SimOutcome o;
          if (options.variant == SimVariant::SingleFailure) {
            o = single_failure_outcome(seq, next_arrival(model, 0.0, options.sim.method, rng));
          } else if (options.sim.method == SamplingMethod::Inversion) {
            o = simulate_inversion(model, seq, rng, options.sim.restart_cap);
          } else {
            o = simulate_thinning(model, seq, rng, options.sim.restart_cap);
          }
          bs.add(o.makespan, o.total_restarts());
        } catch (const DivergenceError& e) {
          std::lock_guard lock(err_mu);
          if (r < err_rep) {
            err_rep = r;
            err = std::make_exception_ptr(DivergenceError("replication " + std::to_string(r) + ": " + e.what(),
                                                          e.task_position(), e.expected_attempts()));
          }
          return;
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (r < err_rep) {
            err_rep = r;
            err = std::current_exception();
          }
          return;
        }
      }
      stats[b] = bs;
    }
  };

  const unsigned threads = std::max<unsigned>(
      1, std::min<std::uint64_t>(options.threads ? options.threads : default_thread_count(), blocks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (err) std::rethrow_exception(err);

  BlockStats all;
  for (const auto& bs : stats) all.merge(bs);
  MakespanEstimate est;
  est.mean = all.mean;
  est.replications = all.n;
  const double var = all.n > 1 ? all.m2 / static_cast<double>(all.n - 1) : 0.0;
  est.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(all.n));
  est.mean_restarts = all.restart_sum / static_cast<double>(all.n);
  est.max_restarts = all.max_restarts;
  est.max_makespan = all.max_makespan;
  return est;
}

}  // namespace nhpp_sched
