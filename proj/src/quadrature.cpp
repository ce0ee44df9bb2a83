#include "nhpp_sched/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

double integrate(const std::function<double(double)>& f, double a, double b, std::span<const double> breaks,
                 double rel_tol) {
  if (!(a <= b)) fail(ErrorCode::Domain, "integrate: requires a <= b");
  if (a == b) return 0.0;
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 20, rel_tol);
  }
  return total;
}

}  // namespace nhpp_sched
