#include "mapl/distributions.hpp"

#include <cmath>
#include <string>

#include "mapl/error.hpp"
#include "mapl/numeric.hpp"

namespace mapl {

std::string_view distribution_name(DistributionKind k) noexcept {
  return k == DistributionKind::kNormal ? "normal" : "fosgerau_mabit";
}

DistributionKind parse_distribution(std::string_view name) {
  if (name == "normal") return DistributionKind::kNormal;
  if (name == "fosgerau_mabit") return DistributionKind::kFosgerauMabit;
  throw ConfigError("unknown distribution: " + std::string(name));
}

std::size_t param_count(DistributionKind kind, std::size_t fm_order) {
  if (kind == DistributionKind::kNormal) return 2;
  if (fm_order < 1) throw ConfigError("fm_order must be at least 1");
  return fm_order;
}

AggregateDistribution AggregateDistribution::normal(double mu, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("normal sigma must be positive");
  return AggregateDistribution(DistributionKind::kNormal, {mu, std::log(sigma)});
}

AggregateDistribution AggregateDistribution::fosgerau_mabit(std::vector<double> theta) {
  return AggregateDistribution(DistributionKind::kFosgerauMabit, std::move(theta));
}

AggregateDistribution::AggregateDistribution(DistributionKind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {
  if (kind_ == DistributionKind::kNormal && params_.size() != 2)
    throw ConfigError("normal distribution takes [mu, log sigma]");
  if (params_.empty()) throw ConfigError("Fosgerau-Mabit distribution needs at least one coefficient");
  for (double p : params_)
    if (!std::isfinite(p)) throw ConfigError("distribution parameters must be finite");
}

double fm_polynomial(std::span<const double> theta, double u) noexcept {
  double acc = 0.0;
  for (std::size_t m = theta.size(); m-- > 0;) acc = acc * u + theta[m];
  return acc;
}

double sample_valence(const AggregateDistribution& dist, double u) {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("sample_valence: u must lie in (0, 1)");
  const auto p = dist.params();
  if (dist.kind() == DistributionKind::kNormal) return p[0] + std::exp(p[1]) * normal_quantile(u);
  return fm_polynomial(p, u);
}

std::pair<double, double> normal_aggregate_params(double beta0, std::pair<double, double> means,
                                                  std::pair<double, double> sds,
                                                  std::span<const double> wxz) {
  if (wxz.size() != 3) throw ConfigError("normal_aggregate_params expects features (w, x, z)");
  if (sds.first < 0.0 || sds.second < 0.0) throw ConfigError("standard deviations must be non-negative");
  const double w = wxz[0], x = wxz[1], z = wxz[2];
  const double mean = beta0 * w + means.first * x + means.second * z;
  const double var = sds.first * sds.first * x * x + sds.second * sds.second * z * z;
  return {mean, var};
}

std::pair<double, double> fm_moments(std::span<const double> theta) {
  double mean = 0.0, second = 0.0;
  const std::size_t m = theta.size();
  for (std::size_t a = 0; a < m; ++a) {
    mean += theta[a] / static_cast<double>(a + 1);
    for (std::size_t b = 0; b < m; ++b) second += theta[a] * theta[b] / static_cast<double>(a + b + 1);
  }
  return {mean, second - mean * mean};
}

}  // namespace mapl
