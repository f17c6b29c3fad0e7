#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mapl/choice_data.hpp"
#include "mapl/distributions.hpp"
#include "mapl/draws.hpp"
#include "mapl/mlp.hpp"

namespace mapl {

enum class ModelKind { kMnl, kMxl, kSimpleNn, kDeepNn, kMapl };
enum class Estimator { kLinear, kMlp };

/// How MAPL valence draws are shared.
///   kIndividual: one uniform per (individual, draw), shared by all of that
///                individual's tasks and alternatives; the likelihood is the
///                panel simulated likelihood, as in mixed logit.
///   kTask:       independent uniforms per (task, draw, alternative); the
///                likelihood factorizes over tasks.
enum class DrawCoupling { kIndividual, kTask };

enum class DrawScheme { kFixedCommonRandomNumbers, kPseudoRandom };

std::string_view model_kind_name(ModelKind k) noexcept;
ModelKind parse_model_kind(std::string_view name);
std::string_view estimator_name(Estimator e) noexcept;
Estimator parse_estimator(std::string_view name);
std::string_view coupling_name(DrawCoupling c) noexcept;
DrawCoupling parse_coupling(std::string_view name);
std::string_view draw_scheme_name(DrawScheme s) noexcept;
DrawScheme parse_draw_scheme(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kMnl;
  std::string label;  ///< empty -> default_label()

  Estimator mapl_estimator = Estimator::kMlp;
  DistributionKind mapl_distribution = DistributionKind::kFosgerauMabit;
  std::size_t fm_order = kDefaultFmOrder;
  DrawCoupling draw_coupling = DrawCoupling::kIndividual;

  std::size_t draws_train = 200;
  std::size_t draws_eval = 1'000;
  DrawScheme draw_scheme = DrawScheme::kFixedCommonRandomNumbers;

  /// Feature columns carrying independent normal coefficients in MXL; the rest are fixed.
  std::vector<std::size_t> mxl_random_features{1, 2};

  /// Network trunk used by SimpleNN and MLP-estimated MAPL; DeepNN uses four layers of hidden[0].
  std::vector<std::size_t> hidden{64, 64};
  double dropout = 0.1;
  bool layer_norm = true;
  double nn_lr = 1e-3;
  /// Mixed into the initialization seed of network weights.
  std::uint64_t nn_seed = 0;
  /// Step size for the low-dimensional parametric models (MNL, MXL, linear MAPL).
  double lr = 0.02;

  void validate() const;
  std::string default_label() const;
  std::string display_label() const { return label.empty() ? default_label() : label; }
  bool uses_network() const noexcept;
  bool uses_draws() const noexcept;
};

/// Shorthands: mnl, mxl, simple_nn, deep_nn, mapl_normal, mapl_fm,
/// mapl_linear_normal, mapl_linear_fm.
ModelSpec model_preset(std::string_view name);

struct EvalOptions {
  Mode mode = Mode::kEval;
  std::uint64_t dropout_seed = 0;
};

struct NllResult {
  double nll = 0.0;
  std::size_t clamp_count = 0;
};

/// Softmax with max-subtraction. Output sums to 1 and is invariant to adding a
/// constant to every valence.
std::vector<double> logit_link(std::span<const double> valences);
void logit_link(std::span<const double> valences, std::span<double> out);

/// A choice model bound to a feature dimension. Parameters live outside the
/// model as a flat vector so one optimizer drives every kind.
class ChoiceModel {
 public:
  virtual ~ChoiceModel() = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t num_features() const noexcept { return k_; }

  virtual std::size_t num_params() const = 0;
  virtual Eigen::VectorXd initial_params(std::uint64_t seed) const = 0;
  virtual double learning_rate() const { return spec_.lr; }

  /// Shape of the draw tensor required to evaluate `ds` (empty for
  /// deterministic models): {groups, dims}.
  virtual std::pair<std::size_t, std::size_t> draw_shape(const ChoiceDataset& ds) const;
  UniformDraws make_draws(const ChoiceDataset& ds, std::size_t draws, std::uint64_t seed, Stream stream) const;

  /// Negative log-likelihood of `ds`; when grad is non-null it is resized and
  /// overwritten with d(nll)/d(params).
  virtual NllResult nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws& draws,
                        const EvalOptions& opts, Eigen::VectorXd* grad) const = 0;

  /// Simulated choice probabilities for one task (J rows of K features),
  /// averaged over the given group of draws (ignored by deterministic models).
  virtual std::vector<double> probabilities(const Eigen::VectorXd& params, std::span<const double> task_features,
                                            std::size_t alternatives, const DrawGroup& draws) const = 0;

  /// Distribution parameters per alternative (MAPL); empty for other models.
  virtual std::size_t distribution_param_count() const { return 0; }

 protected:
  ChoiceModel(ModelSpec spec, std::size_t num_features);
  void check_dataset(const ChoiceDataset& ds) const;
  void check_draws(const ChoiceDataset& ds, const UniformDraws& draws) const;

  ModelSpec spec_;
  std::size_t k_;
};

std::unique_ptr<ChoiceModel> make_model(const ModelSpec& spec, std::size_t num_features);

// ---------------------------------------------------------------------------
// Multinomial logit: v_j = beta' x_j.

/// NLL = -sum log P(chosen) with analytic gradient sum (P - y)' X.
double mnl_nll(std::span<const double> beta, const ChoiceDataset& ds, Eigen::VectorXd* grad = nullptr);

// ---------------------------------------------------------------------------
// Mixed logit with independent normal coefficients on a subset of features.
// Parameter layout: [fixed coefficients..., means..., log sds...], with fixed
// and random features each in ascending column order.

struct MxlLayout {
  std::vector<std::size_t> fixed;
  std::vector<std::size_t> random;
  std::size_t size() const noexcept { return fixed.size() + 2 * random.size(); }
};
MxlLayout mxl_layout(std::size_t num_features, std::span<const std::size_t> random_features);

/// Panel simulated NLL: for each individual, -log of the mean over R draws of the
/// product over tasks of P(chosen). Draws: groups = N, dims = number of random
/// features. Gradient by differentiating the simulator with the draws held fixed.
NllResult mxl_snll(const Eigen::VectorXd& params, const MxlLayout& layout, const ChoiceDataset& ds,
                   const UniformDraws& draws, Eigen::VectorXd* grad = nullptr);

/// Convenience form for K = 3 with x0 fixed and x1, x2 random; draws are
/// generated from (R, seed).
NllResult mxl_snll(std::span<const double, 2> means, std::span<const double, 2> log_sds, double beta0,
                   const ChoiceDataset& ds, std::size_t draws, std::uint64_t seed, Eigen::VectorXd* grad = nullptr);

// ---------------------------------------------------------------------------
// MAPL: an estimator maps each alternative's features (shared weights) to the
// parameters of its valence distribution; probabilities are the logit averaged
// over inverse-CDF draws from those distributions.
//
// Linear estimator layouts:
//   Fosgerau-Mabit: theta = W x + b, params = [W (M x K, column-major), b (M)]
//   Normal:         mu = a' x + a0, sigma = sqrt(sum_k s_k^2 x_k^2),
//                   params = [a (K), a0, s (K)]
// The linear Normal variance head is the closed-form aggregation of
// independent normal coefficients (see normal_aggregate_params).

class MaplModel final : public ChoiceModel {
 public:
  MaplModel(ModelSpec spec, std::size_t num_features);

  std::size_t num_params() const override;
  Eigen::VectorXd initial_params(std::uint64_t seed) const override;
  double learning_rate() const override;
  std::pair<std::size_t, std::size_t> draw_shape(const ChoiceDataset& ds) const override;
  NllResult nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws& draws,
                const EvalOptions& opts, Eigen::VectorXd* grad) const override;
  std::vector<double> probabilities(const Eigen::VectorXd& params, std::span<const double> task_features,
                                    std::size_t alternatives, const DrawGroup& draws) const override;
  std::size_t distribution_param_count() const override { return s_; }

  /// Valence distribution of every row (columns of `features`, K x B):
  /// Normal -> 2 x B rows (mu, sigma); Fosgerau-Mabit -> M x B coefficients.
  Eigen::MatrixXd distribution_params(const Eigen::VectorXd& params,
                                      const Eigen::Ref<const Eigen::MatrixXd>& features) const;

  /// Linear Normal parameters reproducing independent-normal mixed logit with
  /// fixed coefficients on the remaining features.
  static Eigen::VectorXd linear_normal_from_mixed_logit(std::span<const double> fixed_or_mean,
                                                        std::span<const double> sds);

 private:
  struct Forward;
  Forward forward(const Eigen::VectorXd& params, const Eigen::Ref<const Eigen::MatrixXd>& features,
                  const EvalOptions& opts, bool keep_cache) const;
  void backward(const Eigen::VectorXd& params, const Eigen::Ref<const Eigen::MatrixXd>& features, Forward& fwd,
                const Eigen::MatrixXd& ddist, Eigen::VectorXd& grad) const;

  MlpConfig mlp_cfg_;
  std::size_t s_;
};

/// Mean simulated probability vector for one task under a MAPL model.
std::vector<double> mapl_probabilities(const MaplModel& model, const Eigen::VectorXd& params,
                                       std::span<const double> task_features, std::size_t alternatives,
                                       const DrawGroup& draws);

/// MAPL negative log-likelihood with draws generated from (R, seed).
NllResult mapl_nll(const MaplModel& model, const Eigen::VectorXd& params, const ChoiceDataset& ds,
                   std::size_t draws, std::uint64_t seed, Eigen::VectorXd* grad = nullptr);

}  // namespace mapl
