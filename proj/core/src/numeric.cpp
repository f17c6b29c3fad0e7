#include "mapl/numeric.hpp"

#include <algorithm>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "mapl/error.hpp"

namespace mapl {

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("normal_quantile: u must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace mapl
