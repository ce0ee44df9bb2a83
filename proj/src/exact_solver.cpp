#include "nhpp_sched/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

// Cumulative intensity the solver may carry over its horizon; e^{-700} is
// still a normal double.
constexpr double kMassBudget = 600.0;
constexpr double kMassLimit = 700.0;

double closure_sum(std::span<const double> seq, std::size_t from, double lambda_inf) {
  double c = 0.0;
  for (std::size_t m = from; m < seq.size(); ++m)
    c += lambda_inf > 0.0 ? std::expm1(lambda_inf * seq[m]) / lambda_inf : seq[m];
  return c;
}

struct Closure {
  std::size_t n_close = 0;  // index of the node at t_close
  double t_close = 0.0;
  TailClosure tail = TailClosure::ExactConstantTail;
  double lambda_inf = 0.0;
};

Closure resolve_closure(const RateModel& model, double total, double h, const std::optional<double>& t_close,
                        bool allow_clamp) {
  const auto& md = model.metadata();
  Closure c;
  double requested = 0.0;
  if (t_close) {
    if (!(*t_close >= 0.0) || !std::isfinite(*t_close))
      fail(ErrorCode::InvalidArgument, "solve_chain: t_close must be finite and >= 0");
    requested = *t_close;
    c.tail = md.tail_time && *md.tail_time <= requested ? TailClosure::ExactConstantTail : TailClosure::ClampedTail;
  } else if (md.tail_time) {
    requested = *md.tail_time;
    c.tail = TailClosure::ExactConstantTail;
  } else {
    if (!allow_clamp)
      fail(ErrorCode::MissingClosure,
           "solve_chain: " + model.label() + " has no constant tail; pass t_close or allow the clamp");
    requested = std::max(10.0 * total, 100.0);
    c.tail = TailClosure::ClampedTail;
    auto load = [&](double t) { return model.cumulative(t) + model.rate(t) * (total + 2.0 * h); };
    if (load(requested) > kMassBudget) {
      double lo = 0.0;
      double hi = requested;
      if (load(lo) > kMassBudget)
        fail(ErrorCode::Domain, "solve_chain: cumulative intensity over one batch exceeds the representable range");
      for (int it = 0; it < 200 && hi - lo > 1e-9 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (load(mid) > kMassBudget ? hi : lo) = mid;
      }
      requested = lo;
    }
  }
  const double steps = requested / h;
  c.n_close = static_cast<std::size_t>(std::ceil(steps - 1e-9));
  c.t_close = static_cast<double>(c.n_close) * h;
  if (c.tail == TailClosure::ClampedTail && !t_close) {
    // rounding up to the grid must not push the clamp past the budget
    while (c.n_close > 0 && model.cumulative(c.t_close) + model.rate(c.t_close) * (total + 2.0 * h) > kMassBudget) {
      --c.n_close;
      c.t_close = static_cast<double>(c.n_close) * h;
    }
  }
  c.lambda_inf = model.rate(c.t_close);
  return c;
}

// Survival e^{-Lambda(0,x)} of the rate frozen at lambda_inf beyond t_close.
struct Survival {
  const RateModel& model;
  double t_close;
  double mass_close;
  double lambda_inf;

  double mass(double x) const {
    return x <= t_close ? model.cumulative(x) : mass_close + lambda_inf * (x - t_close);
  }
  double operator()(double x) const { return std::exp(-mass(x)); }
};

// Survival values at the shifted nodes t_l + r and at the midpoints of
// [t_l + r, t_{l+1}].
struct ShiftTable {
  double r = 0.0;
  std::vector<double> at;
  std::vector<double> mid;
};

struct WindowPoint {
  std::size_t q = 0;          // base node
  const ShiftTable* table = nullptr;  // null when the point is on the grid
};

class ChainSweep {
 public:
  ChainSweep(const RateModel& model, std::span<const double> seq, double h, const Closure& closure,
             std::size_t max_nodes)
      : seq_(seq.begin(), seq.end()),
        h_(h),
        closure_(closure),
        surv_{model, closure.t_close, model.cumulative(closure.t_close), closure.lambda_inf} {
    total_ = std::accumulate(seq_.begin(), seq_.end(), 0.0);
    n_close_ = closure.n_close;
    const double tail_nodes = std::ceil(total_ / h_) + 1.0;
    if (static_cast<double>(n_close_) + tail_nodes + 1.0 > static_cast<double>(max_nodes))
      fail(ErrorCode::GuardExceeded, "solve_chain: grid would exceed the node limit");
    last_ = n_close_ + static_cast<std::size_t>(tail_nodes);
    if (surv_.mass(node(last_)) > kMassLimit)
      fail(ErrorCode::Domain, "solve_chain: cumulative intensity over the solver horizon is not representable");

    P_.resize(last_ + 1);
    for (std::size_t l = 0; l <= last_; ++l) P_[l] = surv_(node(l));
    w0_.resize(last_);
    w1_.resize(last_);
    for (std::size_t l = 0; l < last_; ++l) {
      const double pm = surv_(node(l) + 0.5 * h_);
      const double integral = h_ / 6.0 * (P_[l] + 4.0 * pm + P_[l + 1]);
      const double m0 = P_[l] - P_[l + 1];
      const double m1 = integral - h_ * P_[l + 1];  // first moment about t_l
      w1_[l] = m1 / h_;
      w0_[l] = m0 - w1_[l];
    }
  }

  std::vector<std::vector<double>> run() {
    const std::size_t n = seq_.size();
    phi_.assign(n, std::vector<double>(last_ + 1, 0.0));
    F_.assign(n, std::vector<double>(last_ + 1, 0.0));
    std::vector<std::vector<double>> values(n, std::vector<double>(n_close_ + 1, 0.0));

    for (std::size_t s = n; s-- > 0;) {
      auto& phi = phi_[s];
      auto& F = F_[s];
      const double closure = closure_sum(seq_, s, closure_.lambda_inf);
      for (std::size_t l = n_close_; l <= last_; ++l) phi[l] = node(l) + closure;
      F[last_] = 0.0;
      for (std::size_t l = last_; l-- > n_close_;) F[l] = w0_[l] * phi[l] + w1_[l] * phi[l + 1] + F[l + 1];
      values[s][n_close_] = closure;

      // window boundaries relative to t: 0, a_s, a_s + a_{s+1}, ...
      std::vector<WindowPoint> bounds;
      double offset = 0.0;
      bounds.push_back(locate(0.0));
      for (std::size_t k = s; k < n; ++k) {
        offset += seq_[k];
        bounds.push_back(locate(offset));
      }
      const double remaining = offset;
      const WindowPoint& end = bounds.back();

      for (std::size_t j = n_close_; j-- > 0;) {
        const double t = node(j);
        const double pj = P_[j];
        const double p_end = survival_at(end, j);
        auto rhs = [&](double u) {
          phi[j] = t + u;
          F[j] = w0_[j] * phi[j] + w1_[j] * phi[j + 1] + F[j + 1];
          double sum = 0.0;
          for (std::size_t m = 0; m + 1 < bounds.size(); ++m) {
            const std::size_t k = s + m;
            sum += cumulative_at(k, bounds[m], j) - cumulative_at(k, bounds[m + 1], j);
          }
          return (remaining * p_end + sum - t * (pj - p_end)) / pj;
        };
        const double alpha = rhs(0.0);
        const double beta = rhs(1.0) - alpha;
        const double u = alpha / (1.0 - beta);
        phi[j] = t + u;
        F[j] = w0_[j] * phi[j] + w1_[j] * phi[j + 1] + F[j + 1];
        values[s][j] = u;
      }
    }
    return values;
  }

 private:
  double node(std::size_t l) const { return static_cast<double>(l) * h_; }

  WindowPoint locate(double offset) {
    const double steps = offset / h_;
    auto q = static_cast<std::size_t>(std::floor(steps));
    double r = offset - static_cast<double>(q) * h_;
    if (r > h_ * (1.0 - 1e-9)) {
      ++q;
      r = 0.0;
    }
    if (r < h_ * 1e-9) return {q, nullptr};
    for (const auto& t : tables_)
      if (std::abs(t.r - r) <= 1e-12 * h_) return {q, &t};
    ShiftTable t;
    t.r = r;
    t.at.resize(last_);
    t.mid.resize(last_);
    for (std::size_t l = 0; l < last_; ++l) {
      const double x = node(l) + r;
      t.at[l] = surv_(x);
      t.mid[l] = surv_(0.5 * (x + node(l + 1)));
    }
    tables_.push_back(std::move(t));
    return {q, &tables_.back()};
  }

  double survival_at(const WindowPoint& w, std::size_t j) const {
    const std::size_t l = j + w.q;
    return w.table ? w.table->at[l] : P_[l];
  }

  // Integral of p(s)(s + M_k(s)) from t_j + offset to the end of the grid.
  double cumulative_at(std::size_t k, const WindowPoint& w, std::size_t j) const {
    const std::size_t l = j + w.q;
    const auto& F = F_[k];
    if (!w.table) return F[l];
    const auto& phi = phi_[k];
    const double r = w.table->r;
    const double px = w.table->at[l];
    const double pn = P_[l + 1];
    const double integral = (h_ - r) / 6.0 * (px + 4.0 * w.table->mid[l] + pn);
    const double m0 = px - pn;
    const double m1 = integral + r * px - h_ * pn;  // first moment about t_l
    return F[l + 1] + phi[l] * m0 + (phi[l + 1] - phi[l]) * m1 / h_;
  }

  std::vector<double> seq_;
  double h_;
  Closure closure_;
  Survival surv_;
  double total_ = 0.0;
  std::size_t n_close_ = 0;
  std::size_t last_ = 0;
  std::vector<double> P_;
  std::vector<double> w0_;
  std::vector<double> w1_;
  std::vector<std::vector<double>> phi_;
  std::vector<std::vector<double>> F_;
  std::deque<ShiftTable> tables_;  // stable addresses for WindowPoint
};

double max_rate(const RateModel& model, const Closure& c) {
  double m = c.lambda_inf;
  if (c.t_close > 0.0) m = std::max(m, model.sup_on(0.0, c.t_close));
  else m = std::max(m, model.rate(0.0));
  return m;
}

}  // namespace

double constant_rate_single(double lambda, double a) {
  if (!(lambda > 0.0)) fail(ErrorCode::Domain, "constant_rate_single: lambda must be > 0");
  if (!(a >= 0.0)) fail(ErrorCode::Domain, "constant_rate_single: a must be >= 0");
  return std::expm1(lambda * a) / lambda;
}

double constant_rate_batch(double lambda, const TaskBatch& batch) {
  double sum = 0.0;
  for (double a : batch.lengths()) sum += constant_rate_single(lambda, a);
  if (batch.empty() && !(lambda > 0.0)) fail(ErrorCode::Domain, "constant_rate_batch: lambda must be > 0");
  return sum;
}

TwoTaskValues special_two_task(double a, double b, double lambda) {
  if (!(a > 0.0) || !(b > a)) fail(ErrorCode::Domain, "special_two_task: requires 0 < a < b");
  if (!(lambda > 0.0)) fail(ErrorCode::Domain, "special_two_task: lambda must be > 0");
  const double ga = std::expm1(lambda * a) / lambda;
  return {b + std::exp(lambda * (b - a)) * ga, b + ga};
}

double two_phase_delta(double a, double b, double lambda1, double lambda2) {
  if (!(a > 0.0) || !(b >= a)) fail(ErrorCode::Domain, "two_phase_delta: requires 0 < a <= b");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) fail(ErrorCode::Domain, "two_phase_delta: rates must be > 0");
  auto part = [](double l, double x, double y) { return (std::expm1(l * x) - std::expm1(l * y)) / l; };
  return part(lambda1, a, b) - part(lambda2, a, b);
}

std::string_view tail_closure_name(TailClosure t) {
  return t == TailClosure::ExactConstantTail ? "exact-constant-tail" : "clamped-tail";
}

MakespanGrid::MakespanGrid(double h, double t_close, TailClosure tail, double lambda_inf, std::vector<double> sequence,
                           std::vector<std::vector<double>> values)
    : h_(h),
      t_close_(t_close),
      tail_(tail),
      lambda_inf_(lambda_inf),
      seq_(std::move(sequence)),
      values_(std::move(values)) {}

double MakespanGrid::remaining_work(std::size_t s) const {
  double w = 0.0;
  for (std::size_t k = s; k < seq_.size(); ++k) w += seq_[k];
  return w;
}

double MakespanGrid::closure_value(std::size_t s) const { return closure_sum(seq_, s, lambda_inf_); }

double MakespanGrid::value_at(std::size_t s, double t) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "MakespanGrid::value_at: t must be >= 0");
  const auto& v = values_.at(s);
  if (t >= t_close_) return closure_value(s);
  const double x = t / h_;
  const auto l = std::min(static_cast<std::size_t>(x), v.size() - 2);
  const double frac = x - static_cast<double>(l);
  return v[l] + frac * (v[l + 1] - v[l]);
}

double MakespanGrid::expected_makespan() const {
  return values_.empty() ? 0.0 : values_.front().front();
}

MakespanGrid solve_chain(const RateModel& model, std::span<const double> sequence, const ChainOptions& options) {
  if (!(options.h > 0.0) || !std::isfinite(options.h)) fail(ErrorCode::InvalidArgument, "solve_chain: h must be > 0");
  for (double a : sequence)
    if (!(a > 0.0) || !std::isfinite(a)) fail(ErrorCode::InvalidArgument, "solve_chain: task lengths must be > 0");
  const double total = std::accumulate(sequence.begin(), sequence.end(), 0.0);
  const Closure c = resolve_closure(model, total, options.h, options.t_close, options.allow_clamp);
  const double peak = max_rate(model, c);
  if (0.5 * options.h * peak >= 0.5) {
    std::ostringstream os;
    os << "solve_chain: step h=" << options.h << " too coarse for max rate " << peak << " (need h < " << 1.0 / peak
       << ")";
    fail(ErrorCode::StepTooCoarse, os.str());
  }
  std::vector<double> seq(sequence.begin(), sequence.end());
  if (seq.empty()) return MakespanGrid(options.h, c.t_close, c.tail, c.lambda_inf, seq, {});
  ChainSweep sweep(model, seq, options.h, c, options.max_nodes);
  auto values = sweep.run();
  return MakespanGrid(options.h, c.t_close, c.tail, c.lambda_inf, std::move(seq), std::move(values));
}

MakespanGrid solve_chain(const RateModel& model, const TaskBatch& batch, const Permutation& perm,
                         const ChainOptions& options) {
  const auto seq = sequence(batch, perm);
  return solve_chain(model, seq, options);
}

RefineResult refine_until(const RateModel& model, std::span<const double> sequence, double tol,
                          const RefineOptions& options) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "refine_until: tol must be > 0");
  const double total = std::accumulate(sequence.begin(), sequence.end(), 0.0);
  double h = options.h0;
  if (h <= 0.0) {
    const Closure c = resolve_closure(model, total, 0.1, options.t_close, options.allow_clamp);
    const double peak = max_rate(model, c);
    h = peak > 0.0 ? std::min(0.1, 0.5 / peak) : 0.1;
  }
  ChainOptions co;
  co.t_close = options.t_close;
  co.allow_clamp = options.allow_clamp;
  co.max_nodes = options.max_nodes;

  RefineResult res;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (;;) {
    co.h = h;
    MakespanGrid grid = [&] {
      try {
        return solve_chain(model, sequence, co);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::GuardExceeded) throw;
        std::ostringstream os;
        os << "refine_until: grid too large at h=" << h << " before reaching tol " << tol
           << "; last change " << res.last_change;
        fail(ErrorCode::NonConvergence, os.str());
      }
    }();
    const double value = grid.expected_makespan();
    res.history.push_back(value);
    res.h = h;
    res.t_close = grid.t_close();
    res.tail = grid.tail();
    res.value = value;
    if (!std::isnan(previous)) {
      res.last_change = std::abs(value - previous);
      if (res.last_change < tol) return res;
    }
    previous = value;
    h *= 0.5;
    if (h < options.h_min) {
      std::ostringstream os;
      os << "refine_until: step fell below " << options.h_min << " without reaching tol " << tol
         << "; last change " << res.last_change << ", value " << value;
      fail(ErrorCode::NonConvergence, os.str());
    }
  }
}

RefineResult refine_until(const RateModel& model, const TaskBatch& batch, const Permutation& perm, double tol,
                          const RefineOptions& options) {
  const auto seq = sequence(batch, perm);
  return refine_until(model, seq, tol, options);
}

}  // namespace nhpp_sched
