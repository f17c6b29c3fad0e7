#include "mapl/dgp.hpp"

#include <cmath>
#include <vector>

#include "mapl/error.hpp"
#include "mapl/numeric.hpp"
#include "mapl/rng.hpp"

namespace mapl {

std::string_view scenario_name(Scenario s) noexcept {
  switch (s) {
    case Scenario::kIndependentNormals: return "independent_normals";
    case Scenario::kCorrelatedNormals: return "correlated_normals";
    case Scenario::kNormalsWithInteraction: return "interaction";
    case Scenario::kNormalsWithNonlinear: return "nonlinear";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "independent_normals") return Scenario::kIndependentNormals;
  if (name == "correlated_normals") return Scenario::kCorrelatedNormals;
  if (name == "interaction") return Scenario::kNormalsWithInteraction;
  if (name == "nonlinear") return Scenario::kNormalsWithNonlinear;
  throw ConfigError("unknown scenario: " + std::string(name));
}

namespace {

// Lower Cholesky factor of [[s1^2, c], [c, s2^2]].
struct Chol2 {
  double l11, l21, l22;
};

Chol2 cholesky(const DgpSpec& spec) {
  if (spec.scenario != Scenario::kCorrelatedNormals) return {spec.sigma1, 0.0, spec.sigma2};
  const double cov = spec.sigma12 * spec.sigma12;
  const double l21 = cov / spec.sigma1;
  const double rem = spec.sigma2 * spec.sigma2 - l21 * l21;
  // Tolerate rounding at the PSD boundary.
  if (rem < -1e-12 * spec.sigma2 * spec.sigma2) throw ConfigError("covariance matrix is not positive semi-definite");
  return {spec.sigma1, l21, std::sqrt(std::max(rem, 0.0))};
}

}  // namespace

void DgpSpec::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ConfigError("sigma1 and sigma2 must be positive");
  for (double v : {beta0, mu1, mu2, sigma12, beta3})
    if (!std::isfinite(v)) throw ConfigError("DGP coefficients must be finite");
  (void)cholesky(*this);
}

void SimConfig::validate() const {
  if (n_individuals < 1 || tasks_per_individual < 1 || alternatives < 1 || oracle_draws < 1)
    throw ConfigError("simulation counts must be at least 1");
}

std::array<double, 2> coefficients_from_normals(const DgpSpec& spec, double z1, double z2) {
  const Chol2 l = cholesky(spec);
  return {spec.mu1 + l.l11 * z1, spec.mu2 + l.l21 * z1 + l.l22 * z2};
}

PreferenceDraws draw_preferences(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  PreferenceDraws draws;
  draws.betas.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, Stream::kBetas, i);
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    draws.betas.push_back(coefficients_from_normals(spec, z1, z2));
  }
  return draws;
}

double systematic_utility(const DgpSpec& spec, std::array<double, 2> beta_i,
                          std::span<const double> x) {
  if (x.size() != 3) throw ConfigError("systematic_utility expects exactly 3 features");
  double v = spec.beta0 * x[0] + beta_i[0] * x[1] + beta_i[1] * x[2];
  if (spec.scenario == Scenario::kNormalsWithInteraction) v += spec.beta3 * x[0] * x[1];
  if (spec.scenario == Scenario::kNormalsWithNonlinear) v += spec.beta3 * x[1] * x[1];
  return v;
}

namespace {

// Log-probability of `chosen` under the logit over the J utilities in v.
double log_logit_prob(std::span<const double> v, std::size_t chosen) {
  return v[chosen] - log_sum_exp(v);
}

}  // namespace

SimulatedData simulate_dataset(const DgpSpec& spec, const SimConfig& cfg) {
  spec.validate();
  cfg.validate();
  constexpr std::size_t k = 3;
  const std::size_t n = cfg.n_individuals, t = cfg.tasks_per_individual, j = cfg.alternatives;

  SimulatedData out;
  out.preferences = draw_preferences(spec, n, cfg.seed);

  std::vector<double> features(n * t * j * k);
  std::vector<std::int32_t> chosen(n * t);
  std::vector<double> v(j), p(j);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng feat_rng(cfg.seed, Stream::kFeatures, i);
    CounterRng choice_rng(cfg.seed, Stream::kChoices, i);
    const auto beta = out.preferences.betas[i];
    for (std::size_t tt = 0; tt < t; ++tt) {
      double* task = features.data() + (i * t + tt) * j * k;
      for (std::size_t c = 0; c < j * k; ++c) task[c] = feat_rng.uniform(-1.0, 1.0);
      for (std::size_t a = 0; a < j; ++a) v[a] = systematic_utility(spec, beta, {task + a * k, k});
      const double lse = log_sum_exp(v);
      for (std::size_t a = 0; a < j; ++a) p[a] = std::exp(v[a] - lse);
      const double u = choice_rng.uniform();
      std::size_t pick = j - 1;
      double cum = 0.0;
      for (std::size_t a = 0; a < j; ++a) {
        cum += p[a];
        if (u < cum) {
          pick = a;
          break;
        }
      }
      chosen[i * t + tt] = static_cast<std::int32_t>(pick);
    }
  }
  out.data = ChoiceDataset(n, t, j, std::move(features), std::move(chosen));
  return out;
}

OracleResult true_loglik(const DgpSpec& spec, const ChoiceDataset& ds, std::size_t oracle_draws,
                         std::uint64_t seed) {
  spec.validate();
  if (ds.num_features() != 3) throw ConfigError("true_loglik expects K = 3 features");
  if (oracle_draws < 1) throw ConfigError("oracle_draws must be at least 1");
  const std::size_t t = ds.tasks_per_individual(), j = ds.alternatives();
  const double log_r = std::log(static_cast<double>(oracle_draws));
  const double log_floor = std::log(kProbabilityFloor);

  OracleResult result;
  std::vector<double> per_draw(oracle_draws), v(j);
  for (std::size_t i = 0; i < ds.individuals(); ++i) {
    CounterRng rng(seed, Stream::kOracle, i);
    for (std::size_t r = 0; r < oracle_draws; ++r) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const auto beta = coefficients_from_normals(spec, z1, z2);
      double s = 0.0;
      for (std::size_t tt = 0; tt < t; ++tt) {
        for (std::size_t a = 0; a < j; ++a) v[a] = systematic_utility(spec, beta, ds.row(i, tt, a));
        s += log_logit_prob(v, static_cast<std::size_t>(ds.choice(i, tt)));
      }
      per_draw[r] = s;
    }
    double li = log_sum_exp(per_draw) - log_r;
    if (!(li >= log_floor)) {
      li = log_floor;
      ++result.clamp_count;
    }
    result.loglik += li;
  }
  return result;
}

}  // namespace mapl
