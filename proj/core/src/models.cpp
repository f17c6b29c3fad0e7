#include "mapl/models.hpp"

#include <algorithm>
#include <cmath>

#include "mapl/error.hpp"
#include "model_impl.hpp"
#include "mapl/numeric.hpp"

namespace mapl {

std::string_view model_kind_name(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::kMnl: return "mnl";
    case ModelKind::kMxl: return "mxl";
    case ModelKind::kSimpleNn: return "simple_nn";
    case ModelKind::kDeepNn: return "deep_nn";
    case ModelKind::kMapl: return "mapl";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::kMnl, ModelKind::kMxl, ModelKind::kSimpleNn, ModelKind::kDeepNn, ModelKind::kMapl})
    if (model_kind_name(k) == name) return k;
  throw ConfigError("unknown model kind: " + std::string(name));
}

std::string_view estimator_name(Estimator e) noexcept { return e == Estimator::kLinear ? "linear" : "mlp"; }

Estimator parse_estimator(std::string_view name) {
  if (name == "linear") return Estimator::kLinear;
  if (name == "mlp") return Estimator::kMlp;
  throw ConfigError("unknown MAPL estimator: " + std::string(name));
}

std::string_view coupling_name(DrawCoupling c) noexcept {
  return c == DrawCoupling::kIndividual ? "individual" : "task";
}

DrawCoupling parse_coupling(std::string_view name) {
  if (name == "individual") return DrawCoupling::kIndividual;
  if (name == "task") return DrawCoupling::kTask;
  throw ConfigError("unknown draw coupling: " + std::string(name));
}

std::string_view draw_scheme_name(DrawScheme s) noexcept {
  return s == DrawScheme::kPseudoRandom ? "pseudo_random" : "fixed_common_random_numbers";
}

DrawScheme parse_draw_scheme(std::string_view name) {
  if (name == "pseudo_random") return DrawScheme::kPseudoRandom;
  if (name == "fixed_common_random_numbers") return DrawScheme::kFixedCommonRandomNumbers;
  throw ConfigError("unknown draw scheme: " + std::string(name));
}

void ModelSpec::validate() const {
  if (draws_train < 1 || draws_eval < 1) throw ConfigError("draw counts must be at least 1");
  if (fm_order < 1) throw ConfigError("mapl.fm_order must be at least 1");
  if (!(lr > 0.0) || !(nn_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (hidden.empty()) throw ConfigError("nn.hidden must list at least one layer");
  for (auto h : hidden)
    if (h < 1) throw ConfigError("nn.hidden entries must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("nn.dropout must lie in [0, 1)");
  if (kind == ModelKind::kMxl && mxl_random_features.empty())
    throw ConfigError("mixed logit needs at least one random coefficient");
}

std::string ModelSpec::default_label() const {
  switch (kind) {
    case ModelKind::kMnl: return "MNL";
    case ModelKind::kMxl: return "MXL";
    case ModelKind::kSimpleNn: return "SimpleNN";
    case ModelKind::kDeepNn: return "DeepNN";
    case ModelKind::kMapl: {
      std::string s = "MAPL";
      if (mapl_estimator == Estimator::kLinear) s += "-Linear";
      s += mapl_distribution == DistributionKind::kNormal ? "-Normal" : "-FM";
      if (draw_coupling == DrawCoupling::kTask) s += "-task";
      return s;
    }
  }
  return "?";
}

bool ModelSpec::uses_network() const noexcept {
  return kind == ModelKind::kSimpleNn || kind == ModelKind::kDeepNn ||
         (kind == ModelKind::kMapl && mapl_estimator == Estimator::kMlp);
}

bool ModelSpec::uses_draws() const noexcept { return kind == ModelKind::kMxl || kind == ModelKind::kMapl; }

ModelSpec model_preset(std::string_view name) {
  ModelSpec s;
  if (name == "mnl") {
    s.kind = ModelKind::kMnl;
  } else if (name == "mxl") {
    s.kind = ModelKind::kMxl;
  } else if (name == "simple_nn") {
    s.kind = ModelKind::kSimpleNn;
  } else if (name == "deep_nn") {
    s.kind = ModelKind::kDeepNn;
  } else if (name == "mapl_normal" || name == "mapl_fm" || name == "mapl_linear_normal" || name == "mapl_linear_fm") {
    s.kind = ModelKind::kMapl;
    s.mapl_estimator = name.find("linear") != std::string_view::npos ? Estimator::kLinear : Estimator::kMlp;
    s.mapl_distribution =
        name.ends_with("normal") ? DistributionKind::kNormal : DistributionKind::kFosgerauMabit;
  } else {
    throw ConfigError("unknown model: " + std::string(name));
  }
  return s;
}

void logit_link(std::span<const double> valences, std::span<double> out) {
  if (valences.empty()) return;
  const double m = *std::max_element(valences.begin(), valences.end());
  double total = 0.0;
  for (std::size_t j = 0; j < valences.size(); ++j) {
    out[j] = std::exp(valences[j] - m);
    total += out[j];
  }
  for (std::size_t j = 0; j < valences.size(); ++j) out[j] /= total;
}

std::vector<double> logit_link(std::span<const double> valences) {
  std::vector<double> p(valences.size());
  logit_link(valences, p);
  return p;
}

ChoiceModel::ChoiceModel(ModelSpec spec, std::size_t num_features) : spec_(std::move(spec)), k_(num_features) {
  spec_.validate();
  if (k_ < 1) throw ConfigError("models need at least one feature");
}

std::pair<std::size_t, std::size_t> ChoiceModel::draw_shape(const ChoiceDataset&) const { return {0, 0}; }

UniformDraws ChoiceModel::make_draws(const ChoiceDataset& ds, std::size_t draws, std::uint64_t seed,
                                     Stream stream) const {
  const auto [groups, dims] = draw_shape(ds);
  if (groups == 0 || dims == 0) return {};
  return UniformDraws::generate(groups, draws, dims, seed, stream);
}

void ChoiceModel::check_dataset(const ChoiceDataset& ds) const {
  if (ds.num_features() != k_)
    throw ConfigError("dataset has " + std::to_string(ds.num_features()) + " features, model expects " +
                      std::to_string(k_));
}

void ChoiceModel::check_draws(const ChoiceDataset& ds, const UniformDraws& draws) const {
  const auto [groups, dims] = draw_shape(ds);
  if (draws.groups() != groups || draws.dims() != dims || draws.draws() < 1)
    throw ConfigError("draws do not match the dataset shape for " + spec_.display_label());
}

std::unique_ptr<ChoiceModel> make_model(const ModelSpec& spec, std::size_t num_features) {
  switch (spec.kind) {
    case ModelKind::kMnl: return detail::make_mnl(spec, num_features);
    case ModelKind::kMxl: return detail::make_mxl(spec, num_features);
    case ModelKind::kSimpleNn:
    case ModelKind::kDeepNn: return detail::make_nn(spec, num_features);
    case ModelKind::kMapl: return std::make_unique<MaplModel>(spec, num_features);
  }
  throw ConfigError("unknown model kind");
}

namespace detail {

PanelTerm panel_term(const Eigen::Ref<const Eigen::RowVectorXd>& loglik, Eigen::RowVectorXd& weights) {
  const double m = loglik.maxCoeff();
  weights = (loglik.array() - m).exp();
  const double total = weights.sum();
  const double log_mean = m + std::log(total) - std::log(static_cast<double>(loglik.size()));
  if (std::isnan(log_mean)) return {log_mean, false};
  if (log_mean < std::log(kProbabilityFloor)) {
    weights.setZero();
    return {-std::log(kProbabilityFloor), true};
  }
  weights /= total;
  return {-log_mean, false};
}

}  // namespace detail

}  // namespace mapl
