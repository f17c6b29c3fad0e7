#include "mapl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mapl/error.hpp"

namespace mapl {

double pct_error(double ll_model, double ll_true) {
  if (ll_true == 0.0) throw ConfigError("percent error is undefined for a zero true log-likelihood");
  return 100.0 * (ll_true - ll_model) / std::abs(ll_true);
}

namespace {

double sorted_quantile(const std::vector<double>& s, double p) {
  const double pos = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<double> sorted_copy(std::span<const double> values) {
  if (values.empty()) throw ConfigError("cannot summarize an empty group");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

double quantile(std::span<const double> values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  return sorted_quantile(sorted_copy(values), p);
}

BoxplotStats summarize_boxplot(std::span<const double> values) {
  const auto s = sorted_copy(values);
  BoxplotStats b;
  b.min = s.front();
  b.max = s.back();
  b.q1 = sorted_quantile(s, 0.25);
  b.median = sorted_quantile(s, 0.5);
  b.q3 = sorted_quantile(s, 0.75);
  double total = 0.0;
  for (double v : values) total += v;
  b.mean = total / static_cast<double>(values.size());
  return b;
}

}  // namespace mapl
