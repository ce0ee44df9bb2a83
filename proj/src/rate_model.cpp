#include "nhpp_sched/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct KindEntry {
  RateKind kind;
  std::string_view name;
  std::string_view short_name;
};

constexpr KindEntry kKinds[] = {
    {RateKind::Constant, "Constant", "constant"},
    {RateKind::LinearIncreasing, "LinearIncreasing", "linear-increasing"},
    {RateKind::ConcaveIncreasing, "ConcaveIncreasing", "concave-increasing"},
    {RateKind::StepIncreasing, "StepIncreasing", "step-increasing"},
    {RateKind::LinearDecreasing, "LinearDecreasing", "linear-decreasing"},
    {RateKind::ConvexDecreasing, "ConvexDecreasing", "convex-decreasing"},
    {RateKind::StepDecreasing, "StepDecreasing", "step-decreasing"},
    {RateKind::Sinusoidal, "Sinusoidal", "sinusoidal"},
    {RateKind::Bathtub, "Bathtub", "bathtub"},
    {RateKind::ZeroThenConstant, "ZeroThenConstant", "zero-then-constant"},
    {RateKind::TwoPhaseConstant, "TwoPhaseConstant", "two-phase-constant"},
    {RateKind::PiecewiseConstant, "PiecewiseConstant", "piecewise-constant"},
    {RateKind::Exponential, "Exponential", "exponential"},
    {RateKind::Polynomial, "Polynomial", "polynomial"},
};

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::string_view kind_name(RateKind kind) {
  for (const auto& e : kKinds)
    if (e.kind == kind) return e.name;
  return "Unknown";
}

std::optional<RateKind> kind_from_name(std::string_view name) {
  for (const auto& e : kKinds)
    if (e.name == name || e.short_name == name) return e.kind;
  return std::nullopt;
}

std::vector<RateKind> all_rate_kinds() {
  std::vector<RateKind> out;
  for (const auto& e : kKinds) out.push_back(e.kind);
  return out;
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Constant: return "Constant";
    case Direction::NonIncreasing: return "NonIncreasing";
    case Direction::NonDecreasing: return "NonDecreasing";
    case Direction::NonMonotone: return "NonMonotone";
  }
  return "NonMonotone";
}

RateModel::RateModel(RateKind kind, std::map<std::string, double> params,
                     std::vector<Segment> segments, RateMetadata meta)
    : kind_(kind), params_(std::move(params)), segments_(std::move(segments)), meta_(meta) {
  double cum = 0.0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    auto& s = segments_[i];
    s.end = (i + 1 < segments_.size()) ? segments_[i + 1].start : kInf;
    s.cum_start = cum;
    if (std::isfinite(s.end)) cum += shape_integral(s, s.start, s.end);
  }
  const Segment& last = segments_.back();
  if (last.shape == Shape::Affine && last.c0 == 0.0 && last.c1 == 0.0) {
    total_mass_ = last.cum_start;
  } else if (last.shape == Shape::Exp && last.c1 < 0.0) {
    total_mass_ = last.cum_start + last.c0 * std::exp(last.c1 * last.start) / -last.c1;
  } else {
    total_mass_ = kInf;
  }
}

// ---------------------------------------------------------------------------
// Factories

RateModel RateModel::constant(double lambda) {
  require(finite_nonneg(lambda), "Constant: lambda must be finite and >= 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 1.0;
  m.f_plus = 1.0;
  m.lipschitz = 0.0;
  m.tail_time = 0.0;
  m.monotonicity = {Direction::Constant, 0.0};
  return RateModel(RateKind::Constant, {{"lambda", lambda}}, {{Shape::Affine, 0.0, kInf, lambda}}, m);
}

RateModel RateModel::linear_increasing(double lambda, double a) {
  require(finite_positive(lambda) && finite_positive(a), "LinearIncreasing: lambda and a must be > 0");
  const double tau = lambda / a;
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.0;
  m.f_plus = 1.0;
  m.lipschitz = a;
  m.tail_time = tau;
  m.monotonicity = {Direction::NonDecreasing, tau};
  return RateModel(RateKind::LinearIncreasing, {{"lambda", lambda}, {"a", a}},
                   {{Shape::Affine, 0.0, 0.0, 0.0, a}, {Shape::Affine, tau, 0.0, lambda}}, m);
}

RateModel RateModel::concave_increasing(double lambda, double a, std::optional<double> t_cap) {
  require(finite_positive(lambda) && finite_positive(a), "ConcaveIncreasing: lambda and a must be > 0");
  if (t_cap) require(finite_positive(*t_cap), "ConcaveIncreasing: t_cap must be > 0");
  const double k = lambda * std::sqrt(a);
  std::vector<Segment> segs{{Shape::SqrtPower, 0.0, 0.0, k}};
  std::map<std::string, double> params{{"lambda", lambda}, {"a", a}};
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.0;
  if (t_cap) {
    const double top = k * std::sqrt(*t_cap);
    segs.push_back({Shape::Affine, *t_cap, 0.0, top});
    params["t_cap"] = *t_cap;
    m.f_plus = top / lambda;
    m.tail_time = *t_cap;
    m.monotonicity = {Direction::NonDecreasing, *t_cap};
  } else {
    m.monotonicity = {Direction::NonDecreasing, kInf};
  }
  // sqrt(t) has unbounded slope at the origin.
  m.lipschitz = std::nullopt;
  return RateModel(RateKind::ConcaveIncreasing, params, segs, m);
}

RateModel RateModel::step_increasing(double lambda, double t0) {
  require(finite_positive(lambda) && finite_positive(t0), "StepIncreasing: lambda and t0 must be > 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.5;
  m.f_plus = 1.0;
  m.tail_time = t0;
  m.monotonicity = {Direction::NonDecreasing, 0.0};
  return RateModel(RateKind::StepIncreasing, {{"lambda", lambda}, {"t0", t0}},
                   {{Shape::Affine, 0.0, 0.0, lambda / 2.0}, {Shape::Affine, t0, 0.0, lambda}}, m);
}

RateModel RateModel::linear_decreasing(double lambda, double a, double lambda0) {
  require(finite_positive(lambda) && finite_positive(a), "LinearDecreasing: lambda and a must be > 0");
  require(finite_nonneg(lambda0) && lambda0 < lambda, "LinearDecreasing: need 0 <= lambda0 < lambda");
  const double tau = (lambda - lambda0) / a;
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = lambda0 / lambda;
  m.f_plus = 1.0;
  m.lipschitz = a;
  m.tail_time = tau;
  m.monotonicity = {Direction::NonIncreasing, tau};
  return RateModel(RateKind::LinearDecreasing, {{"lambda", lambda}, {"a", a}, {"lambda0", lambda0}},
                   {{Shape::Affine, 0.0, 0.0, lambda, -a}, {Shape::Affine, tau, 0.0, lambda0}}, m);
}

RateModel RateModel::convex_decreasing(double lambda) {
  require(finite_positive(lambda), "ConvexDecreasing: lambda must be > 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.0;
  m.f_plus = 1.0;
  m.lipschitz = 0.5 * lambda;
  m.monotonicity = {Direction::NonIncreasing, kInf};
  return RateModel(RateKind::ConvexDecreasing, {{"lambda", lambda}}, {{Shape::InvSqrt, 0.0, 0.0, lambda}}, m);
}

RateModel RateModel::step_decreasing(double lambda, double t0) {
  require(finite_positive(lambda) && finite_positive(t0), "StepDecreasing: lambda and t0 must be > 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.5;
  m.f_plus = 1.0;
  m.tail_time = t0;
  m.monotonicity = {Direction::NonIncreasing, 0.0};
  return RateModel(RateKind::StepDecreasing, {{"lambda", lambda}, {"t0", t0}},
                   {{Shape::Affine, 0.0, 0.0, lambda}, {Shape::Affine, t0, 0.0, lambda / 2.0}}, m);
}

RateModel RateModel::sinusoidal(double lambda, double a) {
  require(finite_positive(lambda) && finite_positive(a), "Sinusoidal: lambda and a must be > 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.0;
  m.f_plus = 2.0;
  m.lipschitz = lambda * a;
  m.monotonicity = {Direction::NonMonotone, 0.0};
  return RateModel(RateKind::Sinusoidal, {{"lambda", lambda}, {"a", a}},
                   {{Shape::Sine, 0.0, 0.0, lambda, a}}, m);
}

RateModel RateModel::bathtub(double lambda, double a, double t1, double t2, double t3) {
  require(finite_positive(lambda) && finite_positive(a), "Bathtub: lambda and a must be > 0");
  require(finite_positive(t1) && std::isfinite(t3) && t1 <= t2 && t2 <= t3,
          "Bathtub: need 0 < t1 <= t2 <= t3");
  require(lambda - a * t1 >= 0.0, "Bathtub: lambda - a*t1 must be >= 0");
  const double low_end = lambda - a * t1;
  const double rise_end = lambda / 2.0 + a * (t3 - t2);
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = std::min(low_end, lambda / 2.0) / lambda;
  m.f_plus = std::max(lambda, rise_end) / lambda;
  const bool continuous =
      std::abs(low_end - lambda / 2.0) <= 1e-12 * lambda && std::abs(rise_end - lambda) <= 1e-12 * lambda;
  if (continuous) m.lipschitz = a;
  m.tail_time = t3;
  m.monotonicity = {Direction::NonMonotone, 0.0};
  std::vector<Segment> segs{{Shape::Affine, 0.0, 0.0, lambda, -a}};
  if (t2 > t1) segs.push_back({Shape::Affine, t1, 0.0, lambda / 2.0});
  if (t3 > t2) segs.push_back({Shape::Affine, t2, 0.0, lambda / 2.0 - a * t2, a});
  segs.push_back({Shape::Affine, t3, 0.0, lambda});
  return RateModel(RateKind::Bathtub,
                   {{"lambda", lambda}, {"a", a}, {"t1", t1}, {"t2", t2}, {"t3", t3}}, segs, m);
}

RateModel RateModel::zero_then_constant(double b, double lambda) {
  require(finite_positive(b) && finite_positive(lambda), "ZeroThenConstant: b and lambda must be > 0");
  RateMetadata m;
  m.lambda_bar = lambda;
  m.f_minus = 0.0;
  m.f_plus = 1.0;
  m.tail_time = b;
  m.monotonicity = {Direction::NonDecreasing, 0.0};
  return RateModel(RateKind::ZeroThenConstant, {{"b", b}, {"lambda", lambda}},
                   {{Shape::Affine, 0.0, 0.0, 0.0}, {Shape::Affine, b, 0.0, lambda}}, m);
}

RateModel RateModel::two_phase_constant(double lambda1, double lambda2, double b) {
  require(finite_nonneg(lambda1) && finite_nonneg(lambda2) && std::max(lambda1, lambda2) > 0.0,
          "TwoPhaseConstant: rates must be >= 0 and not both zero");
  require(finite_positive(b), "TwoPhaseConstant: b must be > 0");
  const double top = std::max(lambda1, lambda2);
  RateMetadata m;
  m.lambda_bar = top;
  m.f_minus = std::min(lambda1, lambda2) / top;
  m.f_plus = 1.0;
  m.tail_time = b;
  if (lambda1 == lambda2) {
    m.lipschitz = 0.0;
    m.tail_time = 0.0;
    m.monotonicity = {Direction::Constant, 0.0};
  } else {
    m.monotonicity = {lambda1 < lambda2 ? Direction::NonDecreasing : Direction::NonIncreasing, 0.0};
  }
  return RateModel(RateKind::TwoPhaseConstant, {{"lambda1", lambda1}, {"lambda2", lambda2}, {"b", b}},
                   {{Shape::Affine, 0.0, 0.0, lambda1}, {Shape::Affine, b, 0.0, lambda2}}, m);
}

RateModel RateModel::piecewise_constant(std::vector<double> breakpoints, std::vector<double> levels) {
  require(levels.size() == breakpoints.size() + 1, "PiecewiseConstant: need one more level than breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    require(finite_positive(breakpoints[i]), "PiecewiseConstant: breakpoints must be > 0");
    if (i > 0) require(breakpoints[i] > breakpoints[i - 1], "PiecewiseConstant: breakpoints must be strictly increasing");
  }
  for (double l : levels) require(finite_nonneg(l), "PiecewiseConstant: levels must be >= 0");
  const double top = *std::max_element(levels.begin(), levels.end());
  const double bottom = *std::min_element(levels.begin(), levels.end());
  RateMetadata m;
  m.lambda_bar = top;
  m.f_minus = top > 0.0 ? bottom / top : 1.0;
  m.f_plus = 1.0;
  m.tail_time = breakpoints.empty() ? 0.0 : breakpoints.back();
  if (top == bottom) {
    m.lipschitz = 0.0;
    m.monotonicity = {Direction::Constant, 0.0};
  } else if (std::is_sorted(levels.begin(), levels.end())) {
    m.monotonicity = {Direction::NonDecreasing, 0.0};
  } else if (std::is_sorted(levels.rbegin(), levels.rend())) {
    m.monotonicity = {Direction::NonIncreasing, 0.0};
  }
  std::vector<Segment> segs{{Shape::Affine, 0.0, 0.0, levels[0]}};
  for (std::size_t i = 0; i < breakpoints.size(); ++i)
    segs.push_back({Shape::Affine, breakpoints[i], 0.0, levels[i + 1]});
  RateModel out(RateKind::PiecewiseConstant, {}, segs, m);
  out.bp_param_ = std::move(breakpoints);
  out.levels_param_ = std::move(levels);
  return out;
}

RateModel RateModel::exponential(double scale, double rate, std::optional<double> t_clamp) {
  require(finite_positive(scale) && std::isfinite(rate), "Exponential: scale must be > 0 and rate finite");
  if (t_clamp) require(finite_positive(*t_clamp), "Exponential: t_clamp must be > 0");
  std::map<std::string, double> params{{"scale", scale}, {"rate", rate}};
  std::vector<Segment> segs;
  segs.push_back(rate == 0.0 ? Segment{Shape::Affine, 0.0, 0.0, scale} : Segment{Shape::Exp, 0.0, 0.0, scale, rate});
  RateMetadata m;
  m.lambda_bar = scale;
  if (t_clamp) {
    params["t_clamp"] = *t_clamp;
    segs.push_back({Shape::Affine, *t_clamp, 0.0, scale * std::exp(rate * *t_clamp)});
  }
  if (rate == 0.0) {
    m.f_minus = 1.0;
    m.f_plus = 1.0;
    m.lipschitz = 0.0;
    m.tail_time = 0.0;
    m.monotonicity = {Direction::Constant, 0.0};
  } else if (rate < 0.0) {
    m.f_plus = 1.0;
    m.f_minus = t_clamp ? std::exp(rate * *t_clamp) : 0.0;
    m.lipschitz = scale * -rate;
    if (t_clamp) m.tail_time = *t_clamp;
    m.monotonicity = {Direction::NonIncreasing, t_clamp ? *t_clamp : kInf};
  } else {
    m.f_minus = 1.0;
    if (t_clamp) {
      m.f_plus = std::exp(rate * *t_clamp);
      m.lipschitz = scale * rate * *m.f_plus;
      m.tail_time = *t_clamp;
    }
    m.monotonicity = {Direction::NonDecreasing, t_clamp ? *t_clamp : kInf};
  }
  return RateModel(RateKind::Exponential, params, segs, m);
}

RateModel RateModel::polynomial(double c0, double c1, double c2, std::optional<double> t_clamp) {
  require(std::isfinite(c0) && std::isfinite(c1) && std::isfinite(c2), "Polynomial: coefficients must be finite");
  if (t_clamp) require(finite_positive(*t_clamp), "Polynomial: t_clamp must be > 0");
  auto value = [&](double t) { return c0 + t * (c1 + t * c2); };
  const double hi = t_clamp ? *t_clamp : kInf;
  if (!t_clamp) {
    require(c2 > 0.0 || (c2 == 0.0 && c1 >= 0.0), "Polynomial: unclamped polynomial must not tend to -inf");
  }
  // Extremes over [0, hi]: endpoints plus the vertex when it lies inside.
  std::vector<double> probes{0.0};
  if (std::isfinite(hi)) probes.push_back(hi);
  if (c2 != 0.0) {
    const double v = -c1 / (2.0 * c2);
    if (v > 0.0 && v < hi) probes.push_back(v);
  }
  double lo_val = kInf;
  double hi_val = -kInf;
  for (double t : probes) {
    lo_val = std::min(lo_val, value(t));
    hi_val = std::max(hi_val, value(t));
  }
  const bool bounded = std::isfinite(hi) || (c1 == 0.0 && c2 == 0.0);
  require(lo_val >= 0.0, "Polynomial: rate must be >= 0 on its domain");

  std::map<std::string, double> params{{"c0", c0}, {"c1", c1}, {"c2", c2}};
  std::vector<Segment> segs{{Shape::Quadratic, 0.0, 0.0, c0, c1, c2}};
  if (c2 == 0.0) segs[0] = {Shape::Affine, 0.0, 0.0, c0, c1};
  if (t_clamp) {
    params["t_clamp"] = *t_clamp;
    segs.push_back({Shape::Affine, *t_clamp, 0.0, value(*t_clamp)});
  }

  RateMetadata m;
  const double d_lo = c1;
  const double d_hi = std::isfinite(hi) ? c1 + 2.0 * c2 * hi : (c2 > 0.0 ? kInf : c1);
  if (bounded) {
    m.lambda_bar = hi_val > 0.0 ? hi_val : 1.0;
    m.f_plus = hi_val / m.lambda_bar;
    m.lipschitz = std::max(std::abs(d_lo), std::abs(d_hi));
  } else {
    m.lambda_bar = c0 > 0.0 ? c0 : 1.0;
    if (c2 == 0.0) m.lipschitz = std::abs(c1);
  }
  m.f_minus = lo_val / m.lambda_bar;
  if (t_clamp) m.tail_time = *t_clamp;
  if (c1 == 0.0 && c2 == 0.0) {
    m.tail_time = 0.0;
    m.monotonicity = {Direction::Constant, 0.0};
  } else if (d_lo >= 0.0 && d_hi >= 0.0) {
    // derivative is affine, so it vanishes at most at one point
    m.monotonicity = {Direction::NonDecreasing, hi};
  } else if (d_lo <= 0.0 && d_hi <= 0.0) {
    m.monotonicity = {Direction::NonIncreasing, hi};
  } else {
    m.monotonicity = {Direction::NonMonotone, 0.0};
  }
  return RateModel(RateKind::Polynomial, params, segs, m);
}

// ---------------------------------------------------------------------------
// Elementary shapes. All formulas use absolute time t.

double RateModel::shape_rate(const Segment& s, double t) {
  switch (s.shape) {
    case Shape::Affine: return s.c0 + s.c1 * t;
    case Shape::SqrtPower: return s.c0 * std::sqrt(t);
    case Shape::InvSqrt: return s.c0 / std::sqrt(t + 1.0);
    case Shape::Sine: return s.c0 * (1.0 + std::sin(s.c1 * t));
    case Shape::Exp: return s.c0 * std::exp(s.c1 * t);
    case Shape::Quadratic: return s.c0 + t * (s.c1 + t * s.c2);
  }
  return 0.0;
}

double RateModel::shape_derivative(const Segment& s, double t) {
  switch (s.shape) {
    case Shape::Affine: return s.c1;
    case Shape::SqrtPower: return t > 0.0 ? 0.5 * s.c0 / std::sqrt(t) : kInf;
    case Shape::InvSqrt: return -0.5 * s.c0 / ((t + 1.0) * std::sqrt(t + 1.0));
    case Shape::Sine: return s.c0 * s.c1 * std::cos(s.c1 * t);
    case Shape::Exp: return s.c0 * s.c1 * std::exp(s.c1 * t);
    case Shape::Quadratic: return s.c1 + 2.0 * s.c2 * t;
  }
  return 0.0;
}

double RateModel::shape_integral(const Segment& s, double u, double v) {
  const double d = v - u;
  if (d <= 0.0) return 0.0;
  switch (s.shape) {
    case Shape::Affine: return d * (s.c0 + 0.5 * s.c1 * (u + v));
    case Shape::SqrtPower: return (2.0 / 3.0) * s.c0 * (v * std::sqrt(v) - u * std::sqrt(u));
    case Shape::InvSqrt: {
      // 2c(sqrt(v+1) - sqrt(u+1)) without cancellation
      return 2.0 * s.c0 * d / (std::sqrt(v + 1.0) + std::sqrt(u + 1.0));
    }
    case Shape::Sine: {
      // cos(au) - cos(av) = 2 sin(a(u+v)/2) sin(a(v-u)/2)
      const double a = s.c1;
      return s.c0 * (d + 2.0 * std::sin(0.5 * a * (u + v)) * std::sin(0.5 * a * d) / a);
    }
    case Shape::Exp: return s.c0 * std::exp(s.c1 * u) * std::expm1(s.c1 * d) / s.c1;
    case Shape::Quadratic:
      return d * (s.c0 + 0.5 * s.c1 * (u + v) + s.c2 * (u * u + u * v + v * v) / 3.0);
  }
  return 0.0;
}

double RateModel::shape_sup(const Segment& s, double u, double v) {
  double best = std::max(shape_rate(s, u), shape_rate(s, v));
  if (s.shape == Shape::Quadratic && s.c2 != 0.0) {
    const double vx = -s.c1 / (2.0 * s.c2);
    if (vx > u && vx < v) best = std::max(best, shape_rate(s, vx));
  }
  if (s.shape == Shape::Sine) {
    const double a = s.c1;
    const double k = std::ceil((a * u - std::numbers::pi / 2.0) / (2.0 * std::numbers::pi));
    if (std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k <= a * v) best = 2.0 * s.c0;
  }
  return best;
}

double RateModel::shape_inverse(const Segment& s, double u, double x) const {
  // Solve Lambda(u, v) = x for v >= u within segment s.
  switch (s.shape) {
    case Shape::Affine: {
      const double beta = s.c0 + s.c1 * u;
      const double disc = beta * beta + 2.0 * s.c1 * x;
      if (disc < 0.0) fail(ErrorCode::Unreachable, "inverse_cumulative: mass not reachable in segment");
      return u + 2.0 * x / (beta + std::sqrt(disc));
    }
    case Shape::SqrtPower: {
      const double base = u * std::sqrt(u) + 1.5 * x / s.c0;
      return std::cbrt(base * base);
    }
    case Shape::InvSqrt: {
      const double r = std::sqrt(u + 1.0) + x / (2.0 * s.c0);
      return r * r - 1.0;
    }
    case Shape::Exp: {
      const double arg = s.c1 * x / (s.c0 * std::exp(s.c1 * u));
      if (arg <= -1.0) fail(ErrorCode::Unreachable, "inverse_cumulative: mass not reachable in segment");
      return u + std::log1p(arg) / s.c1;
    }
    case Shape::Sine:
    case Shape::Quadratic: break;
  }
  // Safeguarded Newton on g(v) = Lambda(u, v) - x, increasing in v.
  double lo = u;
  double hi = s.end;
  if (!std::isfinite(hi)) {
    double step = 1.0;
    hi = u + step;
    while (shape_integral(s, u, hi) < x) {
      lo = hi;
      step *= 2.0;
      hi = u + step;
      if (step > 1e300) fail(ErrorCode::Unreachable, "inverse_cumulative: bracket overflow");
    }
  }
  double v = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double g = shape_integral(s, u, v) - x;
    if (g > 0.0) hi = v; else lo = v;
    if (std::abs(g) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-14 * std::max(1.0, v)) break;
    const double slope = shape_rate(s, v);
    double next = slope > 0.0 ? v - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    v = next;
  }
  return v;
}

// ---------------------------------------------------------------------------

std::size_t RateModel::segment_index(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double value, const Segment& s) { return value < s.start; });
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

double RateModel::rate(double t) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "rate: t must be >= 0, got " + fmt_num(t));
  return std::max(0.0, shape_rate(segments_[segment_index(t)], t));
}

double RateModel::rate_left(double t) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "rate_left: t must be >= 0");
  std::size_t k = segment_index(t);
  if (k > 0 && segments_[k].start == t) --k;
  return std::max(0.0, shape_rate(segments_[k], t));
}

double RateModel::derivative(double t) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "derivative: t must be >= 0");
  return shape_derivative(segments_[segment_index(t)], t);
}

double RateModel::cumulative(double t) const {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "cumulative_intensity: t must be >= 0, got " + fmt_num(t));
  if (std::isinf(t)) return total_mass_;
  const Segment& s = segments_[segment_index(t)];
  return s.cum_start + shape_integral(s, s.start, t);
}

double RateModel::cumulative(double t1, double t2) const {
  if (!(t1 >= 0.0)) fail(ErrorCode::Domain, "cumulative_intensity: t1 must be >= 0");
  if (!(t2 >= t1)) fail(ErrorCode::Domain, "cumulative_intensity: need t1 <= t2");
  const std::size_t k1 = segment_index(t1);
  const std::size_t k2 = segment_index(t2);
  if (k1 == k2) return shape_integral(segments_[k1], t1, t2);
  double sum = shape_integral(segments_[k1], t1, segments_[k1].end);
  for (std::size_t k = k1 + 1; k < k2; ++k) sum += shape_integral(segments_[k], segments_[k].start, segments_[k].end);
  return sum + shape_integral(segments_[k2], segments_[k2].start, t2);
}

double RateModel::inverse_cumulative(double x) const {
  if (!(x >= 0.0)) fail(ErrorCode::Domain, "inverse_cumulative: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x > total_mass_ || (x == total_mass_ && !std::isfinite(segments_.back().end) &&
                          segments_.back().shape == Shape::Exp)) {
    fail(ErrorCode::Unreachable, "inverse_cumulative: x=" + fmt_num(x) + " exceeds total intensity " +
                                     fmt_num(total_mass_));
  }
  // last segment whose cumulative start is strictly below x
  auto it = std::lower_bound(segments_.begin(), segments_.end(), x,
                             [](const Segment& s, double value) { return s.cum_start < value; });
  const Segment& s = *(it - 1);
  const double v = shape_inverse(s, s.start, x - s.cum_start);
  return std::isfinite(s.end) ? std::min(v, s.end) : v;
}

double RateModel::sup_on(double u, double v) const {
  if (!(u >= 0.0 && v >= u)) fail(ErrorCode::Domain, "sup_on: need 0 <= u <= v");
  double best = 0.0;
  for (std::size_t k = segment_index(u); k < segments_.size() && segments_[k].start <= v; ++k) {
    const auto& s = segments_[k];
    const double lo = std::max(u, s.start);
    const double hi = std::min(v, s.end);
    if (std::isinf(hi)) {
      const double far = shape_rate(s, 1e300);
      if (!(far <= shape_rate(s, lo)) && s.shape != Shape::Sine) return kInf;
      best = std::max(best, s.shape == Shape::Sine ? 2.0 * s.c0 : shape_rate(s, lo));
      continue;
    }
    best = std::max(best, shape_sup(s, lo, hi));
  }
  return best;
}

std::vector<double> RateModel::breakpoints() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < segments_.size(); ++k) out.push_back(segments_[k].start);
  return out;
}

std::string RateModel::label() const {
  std::ostringstream os;
  os << kind_name(kind_);
  if (kind_ == RateKind::PiecewiseConstant) {
    os << "{levels=" << levels_param_.size() << "}";
    return os.str();
  }
  if (!params_.empty()) {
    os << "{";
    bool first = true;
    for (const auto& [k, v] : params_) {
      os << (first ? "" : ",") << k << "=" << fmt_num(v);
      first = false;
    }
    os << "}";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Descriptors

namespace {

using nlohmann::json;

double get_param(const json& p, const char* name) {
  if (!p.contains(name) || !p.at(name).is_number())
    fail(ErrorCode::InvalidArgument, std::string("rate model: missing numeric param '") + name + "'");
  return p.at(name).get<double>();
}

std::optional<double> opt_param(const json& p, const char* name) {
  if (!p.contains(name) || p.at(name).is_null()) return std::nullopt;
  if (!p.at(name).is_number())
    fail(ErrorCode::InvalidArgument, std::string("rate model: param '") + name + "' must be numeric");
  return p.at(name).get<double>();
}

RateModel from_json_value(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    fail(ErrorCode::InvalidArgument, "rate model descriptor needs a string 'kind'");
  const std::string name = j.at("kind").get<std::string>();
  const auto kind = kind_from_name(name);
  if (!kind) fail(ErrorCode::InvalidArgument, "unknown rate kind '" + name + "'");
  const json p = j.value("params", json::object());
  switch (*kind) {
    case RateKind::Constant: return RateModel::constant(get_param(p, "lambda"));
    case RateKind::LinearIncreasing: return RateModel::linear_increasing(get_param(p, "lambda"), get_param(p, "a"));
    case RateKind::ConcaveIncreasing:
      return RateModel::concave_increasing(get_param(p, "lambda"), get_param(p, "a"), opt_param(p, "t_cap"));
    case RateKind::StepIncreasing: return RateModel::step_increasing(get_param(p, "lambda"), get_param(p, "t0"));
    case RateKind::LinearDecreasing:
      return RateModel::linear_decreasing(get_param(p, "lambda"), get_param(p, "a"), get_param(p, "lambda0"));
    case RateKind::ConvexDecreasing: return RateModel::convex_decreasing(p.value("lambda", 1.0));
    case RateKind::StepDecreasing: return RateModel::step_decreasing(get_param(p, "lambda"), get_param(p, "t0"));
    case RateKind::Sinusoidal: return RateModel::sinusoidal(get_param(p, "lambda"), get_param(p, "a"));
    case RateKind::Bathtub:
      return RateModel::bathtub(get_param(p, "lambda"), get_param(p, "a"), get_param(p, "t1"), get_param(p, "t2"),
                                get_param(p, "t3"));
    case RateKind::ZeroThenConstant: return RateModel::zero_then_constant(get_param(p, "b"), get_param(p, "lambda"));
    case RateKind::TwoPhaseConstant:
      return RateModel::two_phase_constant(get_param(p, "lambda1"), get_param(p, "lambda2"), get_param(p, "b"));
    case RateKind::PiecewiseConstant: {
      if (!p.contains("breakpoints") || !p.contains("levels") || !p.at("breakpoints").is_array() ||
          !p.at("levels").is_array())
        fail(ErrorCode::InvalidArgument, "PiecewiseConstant needs 'breakpoints' and 'levels' arrays");
      try {
        return RateModel::piecewise_constant(p.at("breakpoints").get<std::vector<double>>(),
                                             p.at("levels").get<std::vector<double>>());
      } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("PiecewiseConstant: ") + e.what());
      }
    }
    case RateKind::Exponential:
      return RateModel::exponential(get_param(p, "scale"), get_param(p, "rate"), opt_param(p, "t_clamp"));
    case RateKind::Polynomial:
      return RateModel::polynomial(get_param(p, "c0"), p.value("c1", 0.0), p.value("c2", 0.0), opt_param(p, "t_clamp"));
  }
  fail(ErrorCode::InvalidArgument, "unhandled rate kind");
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) fail(ErrorCode::InvalidArgument, "bad number '" + item + "' in rate descriptor");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

RateModel from_short(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string name(text.substr(0, colon));
  const std::vector<double> v =
      colon == std::string_view::npos ? std::vector<double>{} : parse_numbers(text.substr(colon + 1));
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (v.size() < lo || v.size() > hi)
      fail(ErrorCode::InvalidArgument, "rate descriptor '" + std::string(text) + "': wrong number of parameters");
  };
  auto opt = [&](std::size_t i) -> std::optional<double> {
    return i < v.size() ? std::optional<double>(v[i]) : std::nullopt;
  };
  if (name == "zero") {
    need(0, 0);
    return RateModel::zero();
  }
  const auto kind = kind_from_name(name);
  if (!kind) fail(ErrorCode::InvalidArgument, "unknown rate kind '" + name + "'");
  switch (*kind) {
    case RateKind::Constant: need(1, 1); return RateModel::constant(v[0]);
    case RateKind::LinearIncreasing: need(2, 2); return RateModel::linear_increasing(v[0], v[1]);
    case RateKind::ConcaveIncreasing: need(2, 3); return RateModel::concave_increasing(v[0], v[1], opt(2));
    case RateKind::StepIncreasing: need(2, 2); return RateModel::step_increasing(v[0], v[1]);
    case RateKind::LinearDecreasing: need(3, 3); return RateModel::linear_decreasing(v[0], v[1], v[2]);
    case RateKind::ConvexDecreasing: need(0, 1); return RateModel::convex_decreasing(v.empty() ? 1.0 : v[0]);
    case RateKind::StepDecreasing: need(2, 2); return RateModel::step_decreasing(v[0], v[1]);
    case RateKind::Sinusoidal: need(2, 2); return RateModel::sinusoidal(v[0], v[1]);
    case RateKind::Bathtub: need(5, 5); return RateModel::bathtub(v[0], v[1], v[2], v[3], v[4]);
    case RateKind::ZeroThenConstant: need(2, 2); return RateModel::zero_then_constant(v[0], v[1]);
    case RateKind::TwoPhaseConstant: need(3, 3); return RateModel::two_phase_constant(v[0], v[1], v[2]);
    case RateKind::PiecewiseConstant: {
      // level0,break1,level1,break2,level2,...
      if (v.empty() || v.size() % 2 == 0)
        fail(ErrorCode::InvalidArgument, "piecewise-constant expects level0,break1,level1,...");
      std::vector<double> bps, levels{v[0]};
      for (std::size_t i = 1; i + 1 < v.size(); i += 2) {
        bps.push_back(v[i]);
        levels.push_back(v[i + 1]);
      }
      return RateModel::piecewise_constant(bps, levels);
    }
    case RateKind::Exponential: need(2, 3); return RateModel::exponential(v[0], v[1], opt(2));
    case RateKind::Polynomial: need(1, 4); return RateModel::polynomial(v[0], v.size() > 1 ? v[1] : 0.0,
                                                                        v.size() > 2 ? v[2] : 0.0, opt(3));
  }
  fail(ErrorCode::InvalidArgument, "unhandled rate kind");
}

}  // namespace

RateModel RateModel::from_json_text(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("rate model JSON: ") + e.what());
  }
  return from_json_value(j);
}

RateModel RateModel::parse(std::string_view descriptor) {
  std::size_t first = descriptor.find_first_not_of(" \t\n\r");
  if (first == std::string_view::npos) fail(ErrorCode::InvalidArgument, "empty rate model descriptor");
  descriptor.remove_prefix(first);
  if (descriptor.front() == '{') return from_json_text(descriptor);
  return from_short(descriptor);
}

std::string RateModel::to_json_text() const {
  json j;
  j["kind"] = std::string(kind_name(kind_));
  json p = json::object();
  for (const auto& [k, v] : params_) p[k] = v;
  if (kind_ == RateKind::PiecewiseConstant) {
    p["breakpoints"] = bp_param_;
    p["levels"] = levels_param_;
  }
  j["params"] = p;
  return j.dump();
}

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Domain: return "domain_error";
    case ErrorCode::Unreachable: return "unreachable";
    case ErrorCode::StepTooCoarse: return "step_too_coarse";
    case ErrorCode::MissingClosure: return "missing_closure";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::NonConvergence: return "non_convergence";
    case ErrorCode::GuardExceeded: return "guard_exceeded";
    case ErrorCode::Config: return "config_error";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown";
}

}  // namespace nhpp_sched
