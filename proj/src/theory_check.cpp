#include "nhpp_sched/theory_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// (e^{l x} - 1) / l with its l -> 0 limit.
double growth(double l, double x) { return l > 0.0 ? std::expm1(l * x) / l : x; }

double sum_squares(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return s;
}

// Candidate permutations compared against `target`: all others when n is
// small, otherwise adjacent swaps of the target plus the opposite rule.
std::vector<Permutation> rivals(std::size_t n, const Permutation& target, std::size_t max_exhaustive,
                                bool& heuristic) {
  std::vector<Permutation> out;
  heuristic = n > max_exhaustive;
  if (!heuristic) {
    for (auto& p : all_permutations(n))
      if (p != target) out.push_back(std::move(p));
    return out;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    auto order = target.order();
    std::swap(order[k], order[k + 1]);
    out.emplace_back(std::move(order));
  }
  auto opposite = target.order();
  std::reverse(opposite.begin(), opposite.end());
  out.emplace_back(std::move(opposite));
  return out;
}

// Sum over positions of base_k * (prefix_k)^2.
double cubic_moment(std::span<const double> seq) {
  double prefix = 0.0;
  double s = 0.0;
  for (double a : seq) {
    prefix += a;
    s += a * prefix * prefix;
  }
  return s;
}

void add_heuristic_failure(ThresholdReport& r, std::size_t n, std::size_t max_exhaustive) {
  r.hypothesis_failures.push_back("n = " + std::to_string(n) + " exceeds the exhaustive limit " +
                                  std::to_string(max_exhaustive) + "; threshold is heuristic");
}

}  // namespace

std::string_view certified_order_name(CertifiedOrder o) {
  switch (o) {
    case CertifiedOrder::SPT: return "SPT";
    case CertifiedOrder::LPT: return "LPT";
    case CertifiedOrder::None: return "None";
  }
  return "None";
}

ThresholdReport::ThresholdReport() : lambda_bar_cap(kNaN), threshold_value(kNaN), tested_value(kNaN) {}

std::string ThresholdReport::to_json() const {
  nlohmann::json j;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j["check"] = check;
  j["certified_order"] = std::string(certified_order_name(certified_order));
  j["binding_permutation"] = binding_permutation ? nlohmann::json(binding_permutation->to_string()) : nullptr;
  j["lambda_bar_cap"] = num(lambda_bar_cap);
  j["threshold_value"] = std::isinf(threshold_value) ? nlohmann::json("inf") : num(threshold_value);
  j["tested_value"] = num(tested_value);
  j["heuristic"] = heuristic;
  j["hypothesis_failures"] = hypothesis_failures;
  j["notes"] = notes;
  nlohmann::json q = nlohmann::json::object();
  for (const auto& [k, v] : quantities) q[k] = num(v);
  j["quantities"] = q;
  return j.dump(2);
}

double normalized_integral(const RateModel& model, double x) {
  const double lbar = model.metadata().lambda_bar;
  if (!(lbar > 0.0)) fail(ErrorCode::Domain, "normalized_integral: model has lambda_bar = 0");
  return model.cumulative(x) / lbar;
}

double weighted_intensity_sum(const RateModel& model, const TaskBatch& batch, const Permutation& perm) {
  const auto seq = sequence(batch, perm);
  double prefix = 0.0;
  double s = 0.0;
  for (double a : seq) {
    prefix += a;
    s += a * normalized_integral(model, prefix);
  }
  return s;
}

ThresholdReport theorem1_threshold(const RateModel& model, const TaskBatch& batch, std::size_t max_exhaustive) {
  batch.require_ascending("theorem1_threshold");
  ThresholdReport r;
  r.check = "theorem1";
  const std::size_t n = batch.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "theorem1_threshold: need at least two tasks");
  const auto& md = model.metadata();
  const double total = batch.total();
  r.tested_value = md.lambda_bar;
  if (!md.f_plus) r.hypothesis_failures.push_back("f_plus unavailable (rate unbounded)");
  if (!(md.f_minus > 0.0)) r.hypothesis_failures.push_back("f_minus = 0 (rate not bounded away from zero)");
  const bool dec = md.monotonicity.strictly_decreasing_on(total);
  const bool inc = md.monotonicity.strictly_increasing_on(total);
  if (!dec && !inc) r.hypothesis_failures.push_back("f not strictly monotone on [0, A_n]");

  const Permutation target = inc ? Permutation::reversal(n) : Permutation::identity(n);
  const double s_target = weighted_intensity_sum(model, batch, target);
  double numerator = kInf;
  for (const auto& p : rivals(n, target, max_exhaustive, r.heuristic)) {
    const double d = weighted_intensity_sum(model, batch, p) - s_target;
    if (d < numerator) {
      numerator = d;
      r.binding_permutation = p;
    }
  }
  if (r.heuristic) add_heuristic_failure(r, n, max_exhaustive);

  const double fp = md.f_plus.value_or(kNaN);
  const double denominator = fp * fp * (total * sum_squares(batch.lengths()) + 0.75 * total * total * total);
  r.quantities["numerator"] = numerator;
  r.quantities["denominator"] = denominator;
  r.quantities["target_sum"] = s_target;
  r.lambda_bar_cap = 1.0 / (2.0 * fp * batch.max_length());
  r.threshold_value = numerator / denominator;
  if (md.f_plus && md.lambda_bar > r.lambda_bar_cap)
    r.hypothesis_failures.push_back("lambda_bar exceeds 1/(2 f_plus a_n)");

  if (r.hypothesis_failures.empty()) {
    if (md.lambda_bar < r.threshold_value)
      r.certified_order = dec ? CertifiedOrder::SPT : CertifiedOrder::LPT;
    else
      r.notes.push_back("lambda_bar is not below the threshold");
  }
  return r;
}

TaskBatch ShortTaskSpec::lengths() const {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "ShortTaskSpec: scale must be > 0");
  std::vector<double> out;
  out.reserve(base.size());
  for (double a : base.lengths()) out.push_back(scale * a);
  return TaskBatch(std::move(out));
}

ThresholdReport theorem2_threshold(const RateModel& model, const ShortTaskSpec& spec,
                                   std::optional<double> lambda_bar, std::size_t max_exhaustive) {
  spec.base.require_ascending("theorem2_threshold");
  ThresholdReport r;
  r.check = "theorem2";
  const std::size_t n = spec.base.size();
  if (n < 2) fail(ErrorCode::InvalidArgument, "theorem2_threshold: need at least two tasks");
  const auto& md = model.metadata();
  if (!(md.lambda_bar > 0.0)) fail(ErrorCode::Domain, "theorem2_threshold: model has lambda_bar = 0");
  const double lbar = lambda_bar.value_or(md.lambda_bar);
  if (!(lbar > 0.0)) fail(ErrorCode::InvalidArgument, "theorem2_threshold: lambda_bar must be > 0");
  const TaskBatch actual = spec.lengths();
  const double fprime0 = model.derivative(0.0) / md.lambda_bar;
  r.tested_value = std::abs(fprime0);
  r.quantities["f_prime_0"] = fprime0;

  if (!md.f_plus) r.hypothesis_failures.push_back("f_plus unavailable (rate unbounded)");
  if (!(md.f_minus > 0.0)) r.hypothesis_failures.push_back("f_minus = 0 (rate not bounded away from zero)");
  const bool dec = md.monotonicity.strictly_decreasing_on(actual.total());
  const bool inc = md.monotonicity.strictly_increasing_on(actual.total());
  if (fprime0 == 0.0) r.hypothesis_failures.push_back("f'(0) = 0");
  if (!dec && !inc) r.hypothesis_failures.push_back("f not strictly monotone on [0, A_n]");
  if ((dec && fprime0 > 0.0) || (inc && fprime0 < 0.0))
    r.hypothesis_failures.push_back("sign of f'(0) disagrees with the monotone direction");

  const auto& base = spec.base.lengths();
  const double base_total = spec.base.total();
  const double fp = md.f_plus.value_or(kNaN);
  const double k = fp * fp * (base_total * sum_squares(base) + 0.75 * base_total * base_total * base_total);
  const Permutation target = inc ? Permutation::reversal(n) : Permutation::identity(n);
  const double b_target = cubic_moment(sequence(spec.base, target));
  double threshold = -kInf;
  for (const auto& p : rivals(n, target, max_exhaustive, r.heuristic)) {
    const double bp = cubic_moment(sequence(spec.base, p));
    const double denom = inc ? bp - b_target : b_target - bp;
    const double bound = denom > 0.0 ? 2.0 * lbar * k / denom : kInf;
    if (bound > threshold) {
      threshold = bound;
      r.binding_permutation = p;
    }
  }
  if (r.heuristic) add_heuristic_failure(r, n, max_exhaustive);
  r.threshold_value = threshold;
  r.lambda_bar_cap = 1.0 / (2.0 * fp * actual.max_length());
  r.quantities["lambda_bar"] = lbar;
  r.quantities["numerator_factor"] = k;
  r.notes.push_back("certification holds for sufficiently small scale only; no explicit scale range is implied");

  if (r.hypothesis_failures.empty()) {
    if (r.tested_value > threshold)
      r.certified_order = dec ? CertifiedOrder::SPT : CertifiedOrder::LPT;
    else
      r.notes.push_back("|f'(0)| does not exceed the bound");
  }
  return r;
}

ThresholdReport prop2_cutoffs(const RateModel& model, double a, double b) {
  if (!(a > 0.0) || !(b > a)) fail(ErrorCode::InvalidArgument, "prop2_cutoffs: requires 0 < a < b");
  ThresholdReport r;
  r.check = "prop2";
  r.tested_value = a;
  const auto& md = model.metadata();
  if (!md.lipschitz) r.hypothesis_failures.push_back("Lipschitz constant unavailable");
  if (!md.f_plus) r.hypothesis_failures.push_back("f_plus unavailable (rate unbounded)");
  if (!(md.f_minus > 0.0)) r.hypothesis_failures.push_back("f_minus = 0 (rate not bounded away from zero)");
  const auto& mono = md.monotonicity;
  const bool dec = mono.strictly_decreasing_on(b);
  const bool inc = mono.strictly_increasing_on(b);
  if (!dec && !inc)
    r.hypothesis_failures.push_back("rate not monotone for all t with strict monotonicity on [0, b]");
  if (!md.f_plus || !md.lipschitz || !(dec || inc)) return r;

  const double lf = md.lambda_bar * *md.f_plus;
  const double lip = *md.lipschitz;
  const double l0 = model.rate(0.0);
  const double lb = model.rate(b);
  const double mass = model.cumulative(b);
  const double cap = 1.0 / (2.0 * lf);
  r.lambda_bar_cap = cap;
  double cutoff = kNaN;
  if (dec) {
    if (std::abs(l0 - lf) > 1e-12 * std::max(1.0, lf)) r.hypothesis_failures.push_back("f(0) differs from f_plus");
    const double mb = refine_until(model, std::vector<double>{b}, 1e-6).value;
    const double m1 = (lip + lf * lf) * b + lf * lf * (b + growth(l0, b)) +
                      1.5 * l0 * lb * (1.0 / (2.0 * lf) + b + growth(lb, b)) + lb + lip * mb + l0 * l0 * mb +
                      1.5 * l0;
    cutoff = -std::expm1(b * lb - mass) / m1;
    r.quantities["M1"] = m1;
    r.quantities["M_b0"] = mb;
    r.binding_permutation = Permutation::reversal(2);
  } else {
    const double m2 = 2.5 * lf + b * lip + l0 * (std::exp(lf * b) + 0.5) + lb * (b * lf - 1.0 + std::exp(lf * b));
    cutoff = std::expm1(lb * b - mass) / m2;
    r.quantities["M2"] = m2;
    r.binding_permutation = Permutation::identity(2);
  }
  r.quantities["cap_cutoff"] = cap;
  r.quantities["constant_cutoff"] = cutoff;
  r.threshold_value = std::min(cap, cutoff);
  if (r.hypothesis_failures.empty()) {
    if (a < r.threshold_value)
      r.certified_order = dec ? CertifiedOrder::SPT : CertifiedOrder::LPT;
    else
      r.notes.push_back("a is not below the cutoff");
  }
  return r;
}

BoundsReport bounds_check(const MakespanGrid& grid, double lambda_bar, double f_plus) {
  BoundsReport r;
  const auto& seq = grid.sequence();
  const double a_max = seq.empty() ? 0.0 : *std::max_element(seq.begin(), seq.end());
  if (!(f_plus > 0.0) || !(lambda_bar >= 0.0)) {
    r.notice = "skipped: f_plus and lambda_bar must be positive";
    return r;
  }
  if (lambda_bar > (1.0 + 1e-12) / (2.0 * f_plus * a_max)) {
    std::ostringstream os;
    os << "skipped: lambda_bar " << lambda_bar << " exceeds 1/(2 f_plus a_n) = " << 1.0 / (2.0 * f_plus * a_max);
    r.notice = os.str();
    return r;
  }
  r.applicable = true;
  for (std::size_t s = 0; s < grid.stages(); ++s) {
    const double work = grid.remaining_work(s);
    const double upper = work + lambda_bar * f_plus * sum_squares(std::span(seq).subspan(s));
    const double tol = 1e-9 * std::max(1.0, work);
    for (double m : grid.stage_values(s)) {
      ++r.nodes_checked;
      const double low_v = work - m;
      const double up_v = m - upper;
      r.max_lower_violation = std::max(r.max_lower_violation, low_v);
      r.max_upper_violation = std::max(r.max_upper_violation, up_v);
      r.max_slack_ratio = std::max(r.max_slack_ratio, (m - work) / work);
      if (low_v > tol || up_v > tol) ++r.violations;
    }
  }
  r.passed = r.violations == 0;
  return r;
}

InvarianceReport order_invariance_check(const RateModel& model, const TaskBatch& batch,
                                        const InvarianceOptions& options) {
  InvarianceReport r;
  const auto& md = model.metadata();
  if (!md.tail_time) {
    r.notice = "skipped: rate has no constant tail";
    return r;
  }
  if (!(batch.min_length() > *md.tail_time)) {
    r.notice = "skipped: some task is not longer than the constant-tail time";
    return r;
  }
  if (batch.size() > 5 || batch.empty()) {
    r.notice = "skipped: order invariance is checked for 1 to 5 tasks";
    return r;
  }
  r.applicable = true;
  double lo = kInf;
  double hi = -kInf;
  for (const auto& p : all_permutations(batch.size())) {
    const double v = refine_until(model, batch, p, options.solver_tol).value;
    r.exact.emplace_back(p, v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  r.max_exact_gap = hi - lo;
  bool ok = r.max_exact_gap <= options.tolerance;
  if (options.replications > 0) {
    EstimateOptions eo;
    eo.replications = options.replications;
    eo.seed = options.seed;
    eo.threads = options.threads;
    for (const auto& [p, v] : r.exact) r.monte_carlo.emplace_back(p, estimate_makespan(model, batch, p, eo));
    for (std::size_t i = 0; i < r.monte_carlo.size(); ++i)
      for (std::size_t j = i + 1; j < r.monte_carlo.size(); ++j) {
        const auto& x = r.monte_carlo[i].second;
        const auto& y = r.monte_carlo[j].second;
        const double se = std::hypot(x.std_error, y.std_error);
        if (se > 0.0) r.max_z = std::max(r.max_z, std::abs(x.mean - y.mean) / se);
      }
    ok = ok && r.max_z <= 3.0;
  }
  r.passed = ok;
  return r;
}

}  // namespace nhpp_sched
