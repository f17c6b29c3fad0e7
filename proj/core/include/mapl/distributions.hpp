#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace mapl {

enum class DistributionKind { kNormal, kFosgerauMabit };

/// Config names: "normal", "fosgerau_mabit".
std::string_view distribution_name(DistributionKind k) noexcept;
DistributionKind parse_distribution(std::string_view name);

inline constexpr std::size_t kDefaultFmOrder = 12;

/// Number of distribution parameters predicted per alternative.
/// Normal -> 2 (mean, log sd); Fosgerau-Mabit -> fm_order polynomial coefficients.
std::size_t param_count(DistributionKind kind, std::size_t fm_order = kDefaultFmOrder);

/// Alternative-specific valence distribution.
///   Normal:         params = [mu, log sigma];   nu = mu + exp(log sigma) * PhiInv(u)
///   Fosgerau-Mabit: params = [theta_0..M-1];    nu = sum_m theta_m * u^m
/// The polynomial uses the monomial basis on (0, 1) with unconstrained
/// coefficients, so it need not be monotone in u.
class AggregateDistribution {
 public:
  static AggregateDistribution normal(double mu, double sigma);
  static AggregateDistribution fosgerau_mabit(std::vector<double> theta);

  AggregateDistribution(DistributionKind kind, std::vector<double> params);

  DistributionKind kind() const noexcept { return kind_; }
  std::span<const double> params() const noexcept { return params_; }

 private:
  DistributionKind kind_;
  std::vector<double> params_;
};

/// Inverse-CDF draw. Throws ConfigError unless 0 < u < 1.
double sample_valence(const AggregateDistribution& dist, double u);

/// sum_m theta_m u^m by Horner's rule.
double fm_polynomial(std::span<const double> theta, double u) noexcept;

/// Closed-form aggregation of beta0*w + beta1*x + beta2*z with independent
/// beta1 ~ N(mu1, sd1^2), beta2 ~ N(mu2, sd2^2). Returns (mean, variance).
std::pair<double, double> normal_aggregate_params(double beta0, std::pair<double, double> means,
                                                  std::pair<double, double> sds,
                                                  std::span<const double> wxz);

/// Mean and variance of sum_m theta_m U^m for U ~ Uniform(0, 1).
std::pair<double, double> fm_moments(std::span<const double> theta);

}  // namespace mapl
