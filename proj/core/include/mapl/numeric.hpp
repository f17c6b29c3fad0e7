#pragma once

#include <cmath>
#include <span>

namespace mapl {

/// Standard normal quantile function. Requires 0 < u < 1.
double normal_quantile(double u);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// log(sum(exp(v))) with max-subtraction. Returns -inf for an empty span.
double log_sum_exp(std::span<const double> v);

/// Probability floor applied before taking logs of simulated likelihoods.
inline constexpr double kProbabilityFloor = 1e-30;

}  // namespace mapl
