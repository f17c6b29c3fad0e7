#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapl/choice_data.hpp"

namespace mapl {

/// The four mixed-logit data-generating processes. All share a fixed
/// coefficient on x0 and normally distributed coefficients on x1 and x2.
enum class Scenario {
  kIndependentNormals,
  kCorrelatedNormals,
  kNormalsWithInteraction,  ///< adds beta3 * x0 * x1
  kNormalsWithNonlinear,    ///< adds beta3 * x1^2
};

/// Config names: independent_normals, correlated_normals, interaction, nonlinear.
std::string_view scenario_name(Scenario s) noexcept;
Scenario parse_scenario(std::string_view name);

struct DgpSpec {
  Scenario scenario = Scenario::kIndependentNormals;
  double beta0 = -1.0;
  double mu1 = 1.0;
  double mu2 = 2.0;
  double sigma1 = 1.0;
  double sigma2 = 1.5;
  /// The off-diagonal covariance entry is sigma12^2 (correlated scenario only).
  double sigma12 = 0.7;
  double beta3 = 2.0;

  /// Throws ConfigError for non-positive standard deviations or a covariance
  /// matrix that is not positive semi-definite.
  void validate() const;
  std::string label() const { return std::string(scenario_name(scenario)); }
};

struct SimConfig {
  std::size_t n_individuals = 10'000;
  std::size_t tasks_per_individual = 10;
  std::size_t alternatives = 3;
  std::size_t oracle_draws = 1'000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-individual random coefficients (beta1_i, beta2_i).
struct PreferenceDraws {
  std::vector<std::array<double, 2>> betas;
};

/// Maps two standard normals to (beta1, beta2) under the scenario's covariance.
std::array<double, 2> coefficients_from_normals(const DgpSpec& spec, double z1, double z2);

/// One bivariate-normal draw per individual, keyed by (seed, individual index).
PreferenceDraws draw_preferences(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

/// Systematic utility of one alternative with features (x0, x1, x2).
double systematic_utility(const DgpSpec& spec, std::array<double, 2> beta_i,
                          std::span<const double> features);

struct SimulatedData {
  ChoiceDataset data;
  PreferenceDraws preferences;
};

/// Features i.i.d. Uniform[-1, 1]; one coefficient draw per individual reused
/// across that individual's tasks; choices sampled from the individual's logit.
SimulatedData simulate_dataset(const DgpSpec& spec, const SimConfig& cfg);

struct OracleResult {
  double loglik = 0.0;
  std::size_t clamp_count = 0;
};

/// Panel simulated log-likelihood of the exactly specified mixed logit:
/// sum over individuals of log(mean over draws of prod over tasks of P(chosen)).
/// Draws are keyed by (seed, individual index).
OracleResult true_loglik(const DgpSpec& spec, const ChoiceDataset& ds, std::size_t oracle_draws,
                         std::uint64_t seed);

}  // namespace mapl
