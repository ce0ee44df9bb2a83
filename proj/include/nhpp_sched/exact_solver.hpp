#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/task_batch.hpp"

namespace nhpp_sched {

/// (e^{lambda a} - 1) / lambda, the expected completion time of one task under
/// a constant rate. Throws Domain for lambda <= 0.
double constant_rate_single(double lambda, double a);

/// Sum of constant_rate_single over the batch; order does not matter.
double constant_rate_batch(double lambda, const TaskBatch& batch);

struct TwoTaskValues {
  double a_first = 0.0;
  double b_first = 0.0;
};

/// Exact makespans of the two orders of tasks a < b when the rate is zero on
/// [0, b] and lambda afterwards.
TwoTaskValues special_two_task(double a, double b, double lambda);

/// E[tau_{a,b}] - E[tau_{b,a}] when the rate is lambda1 during the first task
/// and lambda2 afterwards. Positive values favour processing b first.
double two_phase_delta(double a, double b, double lambda1, double lambda2);

enum class TailClosure { ExactConstantTail, ClampedTail };

std::string_view tail_closure_name(TailClosure t);

/// Remaining-makespan functions M_{i:n}(t) sampled on t = 0, h, ..., t_close
/// for every stage of one processing order. Beyond t_close the rate is the
/// constant lambda_inf and each stage equals its constant-rate closed form.
class MakespanGrid {
 public:
  MakespanGrid(double h, double t_close, TailClosure tail, double lambda_inf, std::vector<double> sequence,
               std::vector<std::vector<double>> values);

  double step() const { return h_; }
  double t_close() const { return t_close_; }
  TailClosure tail() const { return tail_; }
  double lambda_inf() const { return lambda_inf_; }
  /// Task lengths in processing order.
  const std::vector<double>& sequence() const { return seq_; }
  std::size_t stages() const { return values_.size(); }
  std::size_t nodes() const { return values_.empty() ? 0 : values_.front().size(); }
  /// Stage s (0-based position in the processing order) covers the tasks at
  /// positions s..n-1.
  const std::vector<double>& stage_values(std::size_t s) const { return values_.at(s); }
  /// Work left at stage s, A_{s:n}.
  double remaining_work(std::size_t s) const;
  /// Closed-form value of stage s beyond t_close.
  double closure_value(std::size_t s) const;
  /// Linear interpolation on the grid, closure beyond t_close.
  double value_at(std::size_t s, double t) const;
  /// M_{1:n}(0).
  double expected_makespan() const;

 private:
  double h_;
  double t_close_;
  TailClosure tail_;
  double lambda_inf_;
  std::vector<double> seq_;
  std::vector<std::vector<double>> values_;
};

struct ChainOptions {
  double h = 1e-2;
  /// Where the tail closure starts. Defaults to the constant-tail time when
  /// the model has one, otherwise max(10 A_n, 100) shortened so that the
  /// cumulative intensity stays representable.
  std::optional<double> t_close;
  /// When false, a model without a constant tail and without an explicit
  /// t_close is refused with MissingClosure.
  bool allow_clamp = true;
  /// Refuse grids with more nodes than this.
  std::size_t max_nodes = 20'000'000;
};

/// Backward sweep over stages and time for the chain of renewal equations.
/// Throws StepTooCoarse when (h/2) * max lambda >= 1/2.
MakespanGrid solve_chain(const RateModel& model, std::span<const double> sequence, const ChainOptions& options);
MakespanGrid solve_chain(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                         const ChainOptions& options);

struct RefineOptions {
  /// 0 picks min(0.1, 0.5 / max lambda).
  double h0 = 0.0;
  double h_min = 1e-7;
  std::optional<double> t_close;
  bool allow_clamp = true;
  std::size_t max_nodes = 20'000'000;
};

struct RefineResult {
  double value = 0.0;
  double h = 0.0;
  double last_change = 0.0;
  double t_close = 0.0;
  TailClosure tail = TailClosure::ExactConstantTail;
  /// M_{1:n}(0) at each step size tried, coarsest first.
  std::vector<double> history;
};

/// Halves h until successive values of M_{1:n}(0) differ by less than tol.
/// Throws NonConvergence when h would drop below h_min or the grid gets too
/// large first.
RefineResult refine_until(const RateModel& model, std::span<const double> sequence, double tol,
                          const RefineOptions& options = {});
RefineResult refine_until(const RateModel& model, const TaskBatch& batch, const Permutation& perm, double tol,
                          const RefineOptions& options = {});

}  // namespace nhpp_sched
