#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nhpp_sched {

enum class RateKind {
  Constant,
  LinearIncreasing,
  ConcaveIncreasing,
  StepIncreasing,
  LinearDecreasing,
  ConvexDecreasing,
  StepDecreasing,
  Sinusoidal,
  Bathtub,
  ZeroThenConstant,
  TwoPhaseConstant,
  PiecewiseConstant,
  Exponential,
  Polynomial,
};

std::string_view kind_name(RateKind kind);
std::optional<RateKind> kind_from_name(std::string_view name);
std::vector<RateKind> all_rate_kinds();

enum class Direction { Constant, NonIncreasing, NonDecreasing, NonMonotone };

std::string_view direction_name(Direction d);

/// Shape of the normalized rate f = lambda / lambda_bar. `strict_until` is the
/// right end of the interval [0, strict_until] on which f is strictly monotone
/// in the stated direction (0 when it is nowhere strict, +inf when everywhere).
struct Monotonicity {
  Direction direction = Direction::NonMonotone;
  double strict_until = 0.0;

  bool strictly_decreasing_on(double horizon) const {
    return direction == Direction::NonIncreasing && strict_until >= horizon && horizon > 0.0;
  }
  bool strictly_increasing_on(double horizon) const {
    return direction == Direction::NonDecreasing && strict_until >= horizon && horizon > 0.0;
  }
};

/// Analytic facts about lambda(t) = lambda_bar * f(t). Unavailable quantities
/// (unbounded f, jumps for the Lipschitz constant, no constant tail) are empty.
struct RateMetadata {
  double f_minus = 0.0;
  std::optional<double> f_plus;
  double lambda_bar = 0.0;
  std::optional<double> lipschitz;
  std::optional<double> tail_time;
  Monotonicity monotonicity;
};

/// A disruption intensity lambda(t) on t >= 0 with exact cumulative intensity.
/// Immutable after construction.
class RateModel {
 public:
  static RateModel constant(double lambda);
  static RateModel zero() { return constant(0.0); }
  static RateModel linear_increasing(double lambda, double a);
  static RateModel concave_increasing(double lambda, double a, std::optional<double> t_cap = {});
  static RateModel step_increasing(double lambda, double t0);
  static RateModel linear_decreasing(double lambda, double a, double lambda0);
  /// lambda / sqrt(t + 1); the unscaled default is 1 / sqrt(t + 1).
  static RateModel convex_decreasing(double lambda = 1.0);
  static RateModel step_decreasing(double lambda, double t0);
  static RateModel sinusoidal(double lambda, double a);
  static RateModel bathtub(double lambda, double a, double t1, double t2, double t3);
  static RateModel zero_then_constant(double b, double lambda);
  static RateModel two_phase_constant(double lambda1, double lambda2, double b);
  static RateModel piecewise_constant(std::vector<double> breakpoints, std::vector<double> levels);
  static RateModel exponential(double scale, double rate, std::optional<double> t_clamp = {});
  static RateModel polynomial(double c0, double c1, double c2, std::optional<double> t_clamp = {});

  /// Accepts a JSON descriptor {"kind": ..., "params": {...}} or the short
  /// form "kind:p1,p2,..." (kebab-case kind names, e.g. "constant:0.4").
  static RateModel parse(std::string_view descriptor);
  static RateModel from_json_text(std::string_view json_text);
  std::string to_json_text() const;

  RateKind kind() const { return kind_; }
  const std::map<std::string, double>& params() const { return params_; }
  const std::vector<double>& breakpoints_param() const { return bp_param_; }
  const std::vector<double>& levels_param() const { return levels_param_; }
  const RateMetadata& metadata() const { return meta_; }
  std::string label() const;

  double rate(double t) const;
  double rate_left(double t) const;
  double derivative(double t) const;

  /// Lambda(0, t).
  double cumulative(double t) const;
  /// Lambda(t1, t2) for 0 <= t1 <= t2.
  double cumulative(double t1, double t2) const;
  /// Lambda(0, inf); +inf unless the tail carries finite mass.
  double total_mass() const { return total_mass_; }
  /// inf{ s >= 0 : Lambda(0, s) >= x }.
  double inverse_cumulative(double x) const;

  /// sup of lambda over [u, v].
  double sup_on(double u, double v) const;
  /// Interior points where lambda or its derivative may jump.
  std::vector<double> breakpoints() const;

 private:
  enum class Shape { Affine, SqrtPower, InvSqrt, Sine, Exp, Quadratic };
  struct Segment {
    Shape shape;
    double start;
    double end;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double cum_start = 0.0;
  };

  RateModel(RateKind kind, std::map<std::string, double> params, std::vector<Segment> segments,
            RateMetadata meta);

  static double shape_rate(const Segment& s, double t);
  static double shape_derivative(const Segment& s, double t);
  static double shape_integral(const Segment& s, double u, double v);
  double shape_inverse(const Segment& s, double u, double x) const;
  static double shape_sup(const Segment& s, double u, double v);
  std::size_t segment_index(double t) const;

  RateKind kind_;
  std::map<std::string, double> params_;
  std::vector<double> bp_param_;
  std::vector<double> levels_param_;
  std::vector<Segment> segments_;
  RateMetadata meta_;
  double total_mass_ = std::numeric_limits<double>::infinity();
};

}  // namespace nhpp_sched
