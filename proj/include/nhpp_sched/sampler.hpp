#pragma once

#include <string_view>
#include <vector>

#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/rng.hpp"

namespace nhpp_sched {

enum class SamplingMethod { Inversion, Thinning };

std::string_view sampling_method_name(SamplingMethod m);
SamplingMethod sampling_method_from_name(std::string_view name);

// Next NHPP point strictly after t. Both return +inf when the process carries
// no further mass after t (e.g. a zero-rate tail).
double next_arrival_inversion(const RateModel& model, double t, RngStream& rng);
double next_arrival_thinning(const RateModel& model, double t, RngStream& rng);
double next_arrival(const RateModel& model, double t, SamplingMethod method, RngStream& rng);

/// Ascending arrival times in [0, horizon].
std::vector<double> sample_path(const RateModel& model, double horizon, SamplingMethod method, RngStream& rng);

}  // namespace nhpp_sched
