#include <cmath>

#include "mapl/error.hpp"
#include "mapl/models.hpp"
#include "model_impl.hpp"

namespace mapl {

double mnl_nll(std::span<const double> beta, const ChoiceDataset& ds, Eigen::VectorXd* grad) {
  const std::size_t k = ds.num_features(), j_count = ds.alternatives();
  if (beta.size() != k) throw ConfigError("MNL coefficient vector has the wrong length");
  if (grad) *grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  std::vector<double> v(j_count), p(j_count);
  double nll = 0.0;
  for (std::size_t i = 0; i < ds.individuals(); ++i)
    for (std::size_t t = 0; t < ds.tasks_per_individual(); ++t) {
      const auto x = ds.task(i, t);
      for (std::size_t j = 0; j < j_count; ++j) {
        double s = 0.0;
        for (std::size_t f = 0; f < k; ++f) s += beta[f] * x[j * k + f];
        v[j] = s;
      }
      const auto c = static_cast<std::size_t>(ds.choice(i, t));
      double m = v[0];
      for (double vj : v) m = std::max(m, vj);
      double z = 0.0;
      for (double vj : v) z += std::exp(vj - m);
      nll -= v[c] - m - std::log(z);
      if (grad) {
        for (std::size_t j = 0; j < j_count; ++j) {
          p[j] = std::exp(v[j] - m) / z;
          const double r = p[j] - (j == c ? 1.0 : 0.0);
          for (std::size_t f = 0; f < k; ++f) (*grad)[static_cast<Eigen::Index>(f)] += r * x[j * k + f];
        }
      }
    }
  return nll;
}

namespace {

class MnlModel final : public ChoiceModel {
 public:
  MnlModel(ModelSpec spec, std::size_t k) : ChoiceModel(std::move(spec), k) {}

  std::size_t num_params() const override { return k_; }
  Eigen::VectorXd initial_params(std::uint64_t) const override {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k_));
  }

  NllResult nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws&, const EvalOptions&,
                Eigen::VectorXd* grad) const override {
    check_dataset(ds);
    return {mnl_nll(std::span<const double>(params.data(), static_cast<std::size_t>(params.size())), ds, grad), 0};
  }

  std::vector<double> probabilities(const Eigen::VectorXd& params, std::span<const double> x, std::size_t j_count,
                                    const DrawGroup&) const override {
    if (static_cast<std::size_t>(params.size()) != k_ || x.size() != j_count * k_)
      throw ConfigError("MNL probabilities: parameter or feature length mismatch");
    std::vector<double> v(j_count, 0.0);
    for (std::size_t j = 0; j < j_count; ++j)
      for (std::size_t f = 0; f < k_; ++f) v[j] += params[static_cast<Eigen::Index>(f)] * x[j * k_ + f];
    return logit_link(v);
  }
};

}  // namespace

std::unique_ptr<ChoiceModel> detail::make_mnl(const ModelSpec& spec, std::size_t k) {
  return std::make_unique<MnlModel>(spec, k);
}

}  // namespace mapl
