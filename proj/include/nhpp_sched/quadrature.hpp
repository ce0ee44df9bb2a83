#pragma once

#include <functional>
#include <span>

namespace nhpp_sched {

/// Adaptive Gauss-Kronrod integral of f over [a, b], split at the given
/// interior points so that jumps in f do not slow convergence.
double integrate(const std::function<double(double)>& f, double a, double b, std::span<const double> breaks = {},
                 double rel_tol = 1e-12);

}  // namespace nhpp_sched
