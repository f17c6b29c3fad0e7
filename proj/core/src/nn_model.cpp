#include <cmath>

#include "mapl/error.hpp"
#include "mapl/models.hpp"
#include "model_impl.hpp"

namespace mapl {

namespace {

// Scalar utility per alternative from a shared network, softmax across the task.
class NnModel final : public ChoiceModel {
 public:
  NnModel(ModelSpec spec, std::size_t k) : ChoiceModel(std::move(spec), k) {
    cfg_.input_dim = k_;
    cfg_.hidden_dims = spec_.kind == ModelKind::kDeepNn ? std::vector<std::size_t>(4, spec_.hidden.front())
                                                         : spec_.hidden;
    cfg_.output_dim = 1;
    cfg_.dropout_rate = spec_.dropout;
    cfg_.use_layer_norm = spec_.layer_norm;
  }

  std::size_t num_params() const override { return MlpParams::count(cfg_); }
  double learning_rate() const override { return spec_.nn_lr; }

  Eigen::VectorXd initial_params(std::uint64_t seed) const override {
    MlpConfig cfg = cfg_;
    cfg.init_seed = seed;
    return MlpParams::initialize(cfg).values();
  }

  NllResult nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws&, const EvalOptions& opts,
                Eigen::VectorXd* grad) const override {
    check_dataset(ds);
    const MlpParams mp(cfg_, params);
    const Eigen::Map<const Eigen::MatrixXd> x(ds.features().data(), static_cast<Eigen::Index>(k_),
                                              static_cast<Eigen::Index>(ds.num_rows()));
    MlpCache cache;
    Eigen::MatrixXd v = mlp_forward(mp, x, opts.mode, opts.dropout_seed, grad ? &cache : nullptr);
    const std::size_t j_count = ds.alternatives();
    NllResult out;
    for (std::size_t task = 0; task < ds.num_tasks(); ++task) {
      auto block = v.middleCols(static_cast<Eigen::Index>(task * j_count), static_cast<Eigen::Index>(j_count));
      const auto c = static_cast<Eigen::Index>(ds.chosen()[task]);
      const double m = block.maxCoeff();
      const double chosen = block(0, c);
      block.array() = (block.array() - m).exp();
      const double z = block.sum();
      out.nll -= chosen - m - std::log(z);
      block /= z;
      block(0, c) -= 1.0;  // dNLL/dv = P - y
    }
    if (grad) {
      *grad = Eigen::VectorXd::Zero(params.size());
      mlp_backward_accumulate(mp, cache, v, *grad);
    }
    return out;
  }

  std::vector<double> probabilities(const Eigen::VectorXd& params, std::span<const double> features,
                                    std::size_t j_count, const DrawGroup&) const override {
    if (features.size() != j_count * k_) throw ConfigError("task features must hold J x K values");
    const MlpParams mp(cfg_, params);
    const Eigen::Map<const Eigen::MatrixXd> x(features.data(), static_cast<Eigen::Index>(k_),
                                              static_cast<Eigen::Index>(j_count));
    const Eigen::MatrixXd v = mlp_forward(mp, x, Mode::kEval, 0, nullptr);
    return logit_link(std::span<const double>(v.data(), j_count));
  }

 private:
  MlpConfig cfg_;
};

}  // namespace

std::unique_ptr<ChoiceModel> detail::make_nn(const ModelSpec& spec, std::size_t k) {
  return std::make_unique<NnModel>(spec, k);
}

}  // namespace mapl
