#include <algorithm>
#include <cmath>

#include "mapl/error.hpp"
#include "mapl/models.hpp"
#include "model_impl.hpp"

namespace mapl {

MxlLayout mxl_layout(std::size_t num_features, std::span<const std::size_t> random_features) {
  MxlLayout out;
  std::vector<bool> is_random(num_features, false);
  for (auto f : random_features) {
    if (f >= num_features) throw ConfigError("random coefficient index " + std::to_string(f) + " out of range");
    if (is_random[f]) throw ConfigError("duplicate random coefficient index " + std::to_string(f));
    is_random[f] = true;
  }
  for (std::size_t f = 0; f < num_features; ++f) (is_random[f] ? out.random : out.fixed).push_back(f);
  return out;
}

namespace {

// Converts an R x TJ utility block into per-draw panel log-likelihoods; on
// return `v` holds the choice probabilities. Draws run down the columns so the
// exponentials vectorize.
void panel_loglik(Eigen::MatrixXd& v, const ChoiceDataset& ds, std::size_t i, Eigen::VectorXd& loglik) {
  const std::size_t t_count = ds.tasks_per_individual(), j_count = ds.alternatives();
  const Eigen::Index r_count = v.rows();
  loglik = Eigen::VectorXd::Zero(r_count);
  Eigen::ArrayXd m(r_count), z(r_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto base = static_cast<Eigen::Index>(t * j_count);
    const auto c = base + static_cast<Eigen::Index>(ds.choice(i, t));
    m = v.col(base).array();
    for (std::size_t j = 1; j < j_count; ++j) m = m.max(v.col(base + static_cast<Eigen::Index>(j)).array());
    loglik.array() += v.col(c).array() - m;
    z.setZero();
    for (std::size_t j = 0; j < j_count; ++j) {
      auto col = v.col(base + static_cast<Eigen::Index>(j)).array();
      col = (col - m).exp();
      z += col;
    }
    loglik.array() -= z.log();
    z = z.inverse();
    for (std::size_t j = 0; j < j_count; ++j) v.col(base + static_cast<Eigen::Index>(j)).array() *= z;
  }
}

}  // namespace

namespace detail {

PanelTerm panel_nll_and_grad(Eigen::MatrixXd& v, const ChoiceDataset& ds, std::size_t i, bool want_grad) {
  Eigen::VectorXd loglik;
  Eigen::RowVectorXd w;
  panel_loglik(v, ds, i, loglik);
  const PanelTerm term = panel_term(loglik.transpose(), w);
  if (want_grad) {
    // d(-log mean_r exp L_r)/dV = w_r * (P - y)
    for (std::size_t t = 0; t < ds.tasks_per_individual(); ++t)
      v.col(static_cast<Eigen::Index>(t * ds.alternatives() + static_cast<std::size_t>(ds.choice(i, t)))).array() -= 1.0;
    v.array().colwise() *= w.transpose().array();
  }
  return term;
}

}  // namespace detail

NllResult mxl_snll(const Eigen::VectorXd& params, const MxlLayout& layout, const ChoiceDataset& ds,
                   const UniformDraws& draws, Eigen::VectorXd* grad) {
  const std::size_t k = ds.num_features();
  const std::size_t nf = layout.fixed.size(), nr = layout.random.size();
  if (nf + nr != k) throw ConfigError("mixed logit layout does not cover the dataset features");
  if (static_cast<std::size_t>(params.size()) != layout.size())
    throw ConfigError("mixed logit parameter vector has the wrong length");
  if (draws.groups() != ds.individuals() || draws.dims() != nr)
    throw ConfigError("mixed logit draws must be shaped individuals x R x random coefficients");

  const std::size_t r_count = draws.draws();
  const std::size_t rows = ds.tasks_per_individual() * ds.alternatives();
  if (grad) *grad = Eigen::VectorXd::Zero(params.size());

  Eigen::VectorXd sd(nr);
  for (std::size_t q = 0; q < nr; ++q) sd[static_cast<Eigen::Index>(q)] = std::exp(params[static_cast<Eigen::Index>(nf + nr + q)]);

  NllResult out;
  Eigen::MatrixXd beta(r_count, k), v;  // one coefficient vector per row
  for (std::size_t f = 0; f < nf; ++f) beta.col(static_cast<Eigen::Index>(layout.fixed[f])).setConstant(params[static_cast<Eigen::Index>(f)]);

  for (std::size_t i = 0; i < ds.individuals(); ++i) {
    const DrawGroup g = draws.group(i);
    for (std::size_t q = 0; q < nr; ++q) {
      const auto col = static_cast<Eigen::Index>(layout.random[q]);
      const double mean = params[static_cast<Eigen::Index>(nf + q)];
      for (std::size_t r = 0; r < r_count; ++r)
        beta(static_cast<Eigen::Index>(r), col) = mean + sd[static_cast<Eigen::Index>(q)] * g.z(r, q);
    }
    // K x TJ view of the individual's features
    const Eigen::Map<const Eigen::MatrixXd> x(ds.task(i, 0).data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(rows));
    v.noalias() = beta * x;
    const auto term = detail::panel_nll_and_grad(v, ds, i, grad != nullptr);
    out.nll += term.nll;
    if (term.clamped) ++out.clamp_count;
    if (grad) {
      const Eigen::MatrixXd dbeta = v * x.transpose();  // R x K
      for (std::size_t f = 0; f < nf; ++f)
        (*grad)[static_cast<Eigen::Index>(f)] += dbeta.col(static_cast<Eigen::Index>(layout.fixed[f])).sum();
      for (std::size_t q = 0; q < nr; ++q) {
        const auto row = dbeta.col(static_cast<Eigen::Index>(layout.random[q]));
        (*grad)[static_cast<Eigen::Index>(nf + q)] += row.sum();
        double s = 0.0;
        for (std::size_t r = 0; r < r_count; ++r) s += row(static_cast<Eigen::Index>(r)) * g.z(r, q);
        (*grad)[static_cast<Eigen::Index>(nf + nr + q)] += s * sd[static_cast<Eigen::Index>(q)];
      }
    }
  }
  return out;
}

NllResult mxl_snll(std::span<const double, 2> means, std::span<const double, 2> log_sds, double beta0,
                   const ChoiceDataset& ds, std::size_t draws, std::uint64_t seed, Eigen::VectorXd* grad) {
  if (ds.num_features() != 3) throw ConfigError("this mixed logit form expects K = 3");
  const std::size_t random[] = {1, 2};
  const auto layout = mxl_layout(3, random);
  Eigen::VectorXd params(5);
  params << beta0, means[0], means[1], log_sds[0], log_sds[1];
  const auto u = UniformDraws::generate(ds.individuals(), draws, 2, seed, Stream::kTrainDraws);
  return mxl_snll(params, layout, ds, u, grad);
}

namespace {

class MxlModel final : public ChoiceModel {
 public:
  MxlModel(ModelSpec spec, std::size_t k)
      : ChoiceModel(std::move(spec), k), layout_(mxl_layout(k, spec_.mxl_random_features)) {}

  std::size_t num_params() const override { return layout_.size(); }

  Eigen::VectorXd initial_params(std::uint64_t) const override {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.size()));
    const auto nf = static_cast<Eigen::Index>(layout_.fixed.size());
    const auto nr = static_cast<Eigen::Index>(layout_.random.size());
    p.segment(nf + nr, nr).setConstant(std::log(0.5));
    return p;
  }

  std::pair<std::size_t, std::size_t> draw_shape(const ChoiceDataset& ds) const override {
    return {ds.individuals(), layout_.random.size()};
  }

  NllResult nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws& draws,
                const EvalOptions&, Eigen::VectorXd* grad) const override {
    check_dataset(ds);
    check_draws(ds, draws);
    return mxl_snll(params, layout_, ds, draws, grad);
  }

  std::vector<double> probabilities(const Eigen::VectorXd& params, std::span<const double> x, std::size_t j_count,
                                    const DrawGroup& draws) const override {
    const std::size_t nf = layout_.fixed.size(), nr = layout_.random.size();
    if (draws.dims != nr || draws.draws < 1) throw ConfigError("mixed logit probabilities need R x D draws");
    std::vector<double> beta(k_), v(j_count), p(j_count), mean(j_count, 0.0);
    for (std::size_t f = 0; f < nf; ++f) beta[layout_.fixed[f]] = params[static_cast<Eigen::Index>(f)];
    for (std::size_t r = 0; r < draws.draws; ++r) {
      for (std::size_t q = 0; q < nr; ++q)
        beta[layout_.random[q]] = params[static_cast<Eigen::Index>(nf + q)] +
                                  std::exp(params[static_cast<Eigen::Index>(nf + nr + q)]) * draws.z(r, q);
      for (std::size_t j = 0; j < j_count; ++j) {
        v[j] = 0.0;
        for (std::size_t f = 0; f < k_; ++f) v[j] += beta[f] * x[j * k_ + f];
      }
      logit_link(v, p);
      for (std::size_t j = 0; j < j_count; ++j) mean[j] += p[j];
    }
    for (auto& m : mean) m /= static_cast<double>(draws.draws);
    return mean;
  }

 private:
  MxlLayout layout_;
};

}  // namespace

std::unique_ptr<ChoiceModel> detail::make_mxl(const ModelSpec& spec, std::size_t k) {
  return std::make_unique<MxlModel>(spec, k);
}

}  // namespace mapl
