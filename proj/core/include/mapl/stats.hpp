#pragma once

#include <span>

namespace mapl {

/// 100 * (ll_true - ll_model) / |ll_true|. Positive when the model fits worse
/// than the truth oracle. Throws ConfigError when ll_true is zero.
double pct_error(double ll_model, double ll_true);

/// Sample quantile by linear interpolation between order statistics at
/// position p * (n - 1) (Hyndman-Fan type 7). Throws ConfigError on empty input
/// or p outside [0, 1].
double quantile(std::span<const double> values, double p);

struct BoxplotStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

BoxplotStats summarize_boxplot(std::span<const double> values);

}  // namespace mapl
