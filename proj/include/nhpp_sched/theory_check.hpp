#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nhpp_sched/exact_solver.hpp"
#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/simulation.hpp"
#include "nhpp_sched/task_batch.hpp"

namespace nhpp_sched {

enum class CertifiedOrder { SPT, LPT, None };

std::string_view certified_order_name(CertifiedOrder o);

/// Outcome of one sufficient-condition check. An order is certified only when
/// every hypothesis holds and the tested quantity meets the bound.
struct ThresholdReport {
  std::string check;
  CertifiedOrder certified_order = CertifiedOrder::None;
  /// Permutation attaining the binding (smallest) bound.
  std::optional<Permutation> binding_permutation;
  /// 1 / (2 f_plus a_max); NaN when f_plus is unavailable.
  double lambda_bar_cap;
  double threshold_value;
  /// The model quantity compared against threshold_value.
  double tested_value;
  /// Scan restricted to a neighbourhood because n exceeded the exhaustive limit.
  bool heuristic = false;
  std::vector<std::string> hypothesis_failures;
  std::vector<std::string> notes;
  /// Intermediate quantities (numerator, denominator, constants, ...).
  std::map<std::string, double> quantities;

  ThresholdReport();
  std::string to_json() const;
};

/// Integral of f = lambda / lambda_bar over [0, x].
double normalized_integral(const RateModel& model, double x);

/// Sum over positions k of a_k times the integral of f over [0, A_k], in the
/// order given by perm.
double weighted_intensity_sum(const RateModel& model, const TaskBatch& batch, const Permutation& perm);

/// Bound on lambda_bar under which SPT (strictly decreasing f) or LPT
/// (strictly increasing f) is optimal. The batch must be ascending.
ThresholdReport theorem1_threshold(const RateModel& model, const TaskBatch& batch, std::size_t max_exhaustive = 10);

/// Short tasks a_i = scale * base_i with ascending base lengths.
struct ShortTaskSpec {
  double scale = 1.0;
  TaskBatch base;

  TaskBatch lengths() const;
};

/// Bound on |f'(0)| above which SPT / LPT is optimal for all sufficiently small
/// scales. Certifies an order only in that limit and never an explicit scale
/// range. lambda_bar defaults to the model's.
ThresholdReport theorem2_threshold(const RateModel& model, const ShortTaskSpec& spec,
                                   std::optional<double> lambda_bar = std::nullopt,
                                   std::size_t max_exhaustive = 10);

/// Cutoffs on the short task a of a two-task batch (a < b).
ThresholdReport prop2_cutoffs(const RateModel& model, double a, double b);

struct BoundsReport {
  bool applicable = false;
  bool passed = false;
  std::string notice;
  std::size_t nodes_checked = 0;
  std::size_t violations = 0;
  double max_lower_violation = 0.0;
  double max_upper_violation = 0.0;
  /// max over nodes of (M - A_{s:n}) / A_{s:n}; at most 1/2 when the lemma applies.
  double max_slack_ratio = 0.0;
};

/// Checks A_{s:n} <= M_{s:n}(t) <= A_{s:n} + lambda_bar f_plus sum a_k^2 at every
/// node. Skipped unless lambda_bar <= 1 / (2 f_plus a_max).
BoundsReport bounds_check(const MakespanGrid& grid, double lambda_bar, double f_plus);

struct InvarianceOptions {
  double tolerance = 1e-4;
  double solver_tol = 1e-6;
  std::uint64_t replications = 0;  // 0 skips the Monte Carlo comparison
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
};

struct InvarianceReport {
  bool applicable = false;
  bool passed = false;
  std::string notice;
  std::vector<std::pair<Permutation, double>> exact;
  double max_exact_gap = 0.0;
  std::vector<std::pair<Permutation, MakespanEstimate>> monte_carlo;
  /// Largest |mean_i - mean_j| / sqrt(se_i^2 + se_j^2).
  double max_z = 0.0;
};

/// Order independence when the rate is constant after t0 and every task is
/// longer than t0. At most 5 tasks.
InvarianceReport order_invariance_check(const RateModel& model, const TaskBatch& batch,
                                        const InvarianceOptions& options = {});

}  // namespace nhpp_sched
