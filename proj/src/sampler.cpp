#include "nhpp_sched/sampler.hpp"

#include <cmath>
#include <limits>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Window length for thinning when the rate has no global bound.
constexpr double kThinningWindow = 1.0;

// Point beyond which the remaining mass of a finite-mass model is negligible.
double thinning_cutoff(const RateModel& model) {
  const double total = model.total_mass();
  if (!std::isfinite(total)) return kInf;
  const double target = total - 1e-13 * std::max(1.0, total);
  return target > 0.0 ? model.inverse_cumulative(target) : 0.0;
}

}  // namespace

std::string_view sampling_method_name(SamplingMethod m) {
  return m == SamplingMethod::Inversion ? "inversion" : "thinning";
}

SamplingMethod sampling_method_from_name(std::string_view name) {
  if (name == "inversion") return SamplingMethod::Inversion;
  if (name == "thinning") return SamplingMethod::Thinning;
  fail(ErrorCode::InvalidArgument, "unknown sampling method '" + std::string(name) + "'");
}

double next_arrival_inversion(const RateModel& model, double t, RngStream& rng) {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "next_arrival: t must be >= 0");
  const double target = model.cumulative(t) + rng.exponential();
  if (target >= model.total_mass()) return kInf;
  return model.inverse_cumulative(target);
}

double next_arrival_thinning(const RateModel& model, double t, RngStream& rng) {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "next_arrival: t must be >= 0");
  const auto& md = model.metadata();
  const bool global = md.f_plus.has_value();
  const double global_max = global ? md.lambda_bar * *md.f_plus : 0.0;
  if (global && global_max <= 0.0) return kInf;
  const double cutoff = thinning_cutoff(model);

  double s = t;
  while (s < cutoff) {
    const double window_end = global ? cutoff : std::min(s + kThinningWindow, cutoff);
    const double bound = global ? global_max : model.sup_on(s, std::min(window_end, s + kThinningWindow));
    if (bound <= 0.0) {
      s = window_end;
      continue;
    }
    const double proposal = s + rng.exponential() / bound;
    if (proposal > window_end) {
      // memoryless restart of the dominating process at the window edge
      s = window_end;
      continue;
    }
    s = proposal;
    if (rng.uniform() * bound <= model.rate(s)) return s;
  }
  return kInf;
}

double next_arrival(const RateModel& model, double t, SamplingMethod method, RngStream& rng) {
  return method == SamplingMethod::Inversion ? next_arrival_inversion(model, t, rng)
                                             : next_arrival_thinning(model, t, rng);
}

std::vector<double> sample_path(const RateModel& model, double horizon, SamplingMethod method, RngStream& rng) {
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "sample_path: horizon must be > 0");
  std::vector<double> out;
  if (method == SamplingMethod::Inversion) {
    // Accumulate in cumulative-intensity space so successive points do not
    // pick up round-trip error.
    const double limit = model.cumulative(horizon);
    double x = rng.exponential();
    while (x <= limit) {
      out.push_back(model.inverse_cumulative(x));
      x += rng.exponential();
    }
    return out;
  }
  double s = next_arrival_thinning(model, 0.0, rng);
  while (s <= horizon) {
    out.push_back(s);
    s = next_arrival_thinning(model, s, rng);
  }
  return out;
}

}  // namespace nhpp_sched
