#include <cmath>

#include "mapl/error.hpp"
#include "mapl/models.hpp"
#include "mapl/numeric.hpp"
#include "model_impl.hpp"

namespace mapl {

namespace {

bool is_normal(const ModelSpec& s) { return s.mapl_distribution == DistributionKind::kNormal; }

// Powers u^0..u^{M-1} of each draw: R x M.
Eigen::MatrixXd power_basis(const DrawGroup& g, std::size_t dim, std::size_t order) {
  Eigen::MatrixXd pw(static_cast<Eigen::Index>(g.draws), static_cast<Eigen::Index>(order));
  for (std::size_t r = 0; r < g.draws; ++r) {
    double p = 1.0;
    const double u = g.u(r, dim);
    for (std::size_t m = 0; m < order; ++m) {
      pw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) = p;
      p *= u;
    }
  }
  return pw;
}

}  // namespace

struct MaplModel::Forward {
  Eigen::MatrixXd dist;  // S x B, natural parameters (mu, sigma) or theta
  MlpCache cache;
};

MaplModel::MaplModel(ModelSpec spec, std::size_t num_features)
    : ChoiceModel(std::move(spec), num_features),
      s_(param_count(spec_.mapl_distribution, spec_.fm_order)) {
  mlp_cfg_.input_dim = k_;
  mlp_cfg_.hidden_dims = spec_.hidden;
  mlp_cfg_.output_dim = s_;
  mlp_cfg_.dropout_rate = spec_.dropout;
  mlp_cfg_.use_layer_norm = spec_.layer_norm;
}

std::size_t MaplModel::num_params() const {
  if (spec_.mapl_estimator == Estimator::kMlp) return MlpParams::count(mlp_cfg_);
  return is_normal(spec_) ? 2 * k_ + 1 : s_ * (k_ + 1);
}

Eigen::VectorXd MaplModel::initial_params(std::uint64_t seed) const {
  if (spec_.mapl_estimator == Estimator::kMlp) {
    MlpConfig cfg = mlp_cfg_;
    cfg.init_seed = seed;
    return MlpParams::initialize(cfg).values();
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params()));
  if (is_normal(spec_)) p.tail(static_cast<Eigen::Index>(k_)).setConstant(0.5);
  return p;
}

double MaplModel::learning_rate() const {
  return spec_.mapl_estimator == Estimator::kMlp ? spec_.nn_lr : spec_.lr;
}

std::pair<std::size_t, std::size_t> MaplModel::draw_shape(const ChoiceDataset& ds) const {
  if (spec_.draw_coupling == DrawCoupling::kIndividual) return {ds.individuals(), 1};
  return {ds.num_tasks(), ds.alternatives()};
}

MaplModel::Forward MaplModel::forward(const Eigen::VectorXd& params, const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const EvalOptions& opts, bool keep_cache) const {
  if (static_cast<std::size_t>(params.size()) != num_params())
    throw ConfigError("MAPL parameter vector has the wrong length");
  Forward f;
  const auto k = static_cast<Eigen::Index>(k_);
  const auto s = static_cast<Eigen::Index>(s_);
  if (spec_.mapl_estimator == Estimator::kMlp) {
    const MlpParams mp(mlp_cfg_, params);
    f.dist = mlp_forward(mp, x, opts.mode, opts.dropout_seed, keep_cache ? &f.cache : nullptr);
    if (is_normal(spec_)) f.dist.row(1) = f.dist.row(1).array().exp().matrix();
  } else if (is_normal(spec_)) {
    const auto a = params.head(k);
    const auto sd = params.tail(k);
    f.dist.resize(2, x.cols());
    f.dist.row(0) = (a.transpose() * x).array() + params[k];
    f.dist.row(1) = (sd.array().square().matrix().transpose() * x.array().square().matrix()).array().sqrt();
  } else {
    const Eigen::Map<const Eigen::MatrixXd> w(params.data(), s, k);
    f.dist = w * x;
    f.dist.colwise() += params.segment(s * k, s);
  }
  for (Eigen::Index c = 0; c < f.dist.cols(); ++c)
    if (!f.dist.col(c).allFinite())
      throw NumericalError("non-finite distribution parameters predicted for row " + std::to_string(c));
  return f;
}

void MaplModel::backward(const Eigen::VectorXd& params, const Eigen::Ref<const Eigen::MatrixXd>& x, Forward& f,
                         const Eigen::MatrixXd& ddist, Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(params.size());
  const auto k = static_cast<Eigen::Index>(k_);
  const auto s = static_cast<Eigen::Index>(s_);
  if (spec_.mapl_estimator == Estimator::kMlp) {
    const MlpParams mp(mlp_cfg_, params);
    if (is_normal(spec_)) {
      Eigen::MatrixXd raw = ddist;
      raw.row(1) = raw.row(1).cwiseProduct(f.dist.row(1));  // d sigma / d log sigma = sigma
      mlp_backward_accumulate(mp, f.cache, raw, grad);
    } else {
      mlp_backward_accumulate(mp, f.cache, ddist, grad);
    }
  } else if (is_normal(spec_)) {
    grad.head(k) = x * ddist.row(0).transpose();
    grad[k] = ddist.row(0).sum();
    const auto sd = params.tail(k);
    Eigen::RowVectorXd coef = ddist.row(1);
    for (Eigen::Index c = 0; c < coef.size(); ++c) coef(c) = f.dist(1, c) > 0.0 ? coef(c) / f.dist(1, c) : 0.0;
    grad.tail(k) = (x.array().square().matrix() * coef.transpose()).cwiseProduct(sd);
  } else {
    Eigen::Map<Eigen::MatrixXd>(grad.data(), s, k) = ddist * x.transpose();
    grad.segment(s * k, s) = ddist.rowwise().sum();
  }
}

Eigen::MatrixXd MaplModel::distribution_params(const Eigen::VectorXd& params,
                                               const Eigen::Ref<const Eigen::MatrixXd>& features) const {
  return forward(params, features, EvalOptions{}, false).dist;
}

NllResult MaplModel::nll(const Eigen::VectorXd& params, const ChoiceDataset& ds, const UniformDraws& draws,
                         const EvalOptions& opts, Eigen::VectorXd* grad) const {
  check_dataset(ds);
  check_draws(ds, draws);
  const Eigen::Map<const Eigen::MatrixXd> x(ds.features().data(), static_cast<Eigen::Index>(k_),
                                            static_cast<Eigen::Index>(ds.num_rows()));
  Forward f = forward(params, x, opts, grad != nullptr);
  const bool normal = is_normal(spec_);
  const std::size_t j_count = ds.alternatives();
  const std::size_t r_count = draws.draws();
  Eigen::MatrixXd ddist;
  if (grad) ddist = Eigen::MatrixXd::Zero(f.dist.rows(), f.dist.cols());

  NllResult out;
  if (spec_.draw_coupling == DrawCoupling::kIndividual) {
    const auto rows = static_cast<Eigen::Index>(ds.tasks_per_individual() * j_count);
    Eigen::MatrixXd v;
    for (std::size_t i = 0; i < ds.individuals(); ++i) {
      const DrawGroup g = draws.group(i);
      const auto cols = f.dist.middleCols(static_cast<Eigen::Index>(i) * rows, rows);
      Eigen::MatrixXd pw;
      Eigen::Map<const Eigen::VectorXd> z(g.normals.data(), static_cast<Eigen::Index>(r_count));
      if (normal) {
        v.noalias() = z * cols.row(1);
        v.rowwise() += cols.row(0);
      } else {
        pw = power_basis(g, 0, s_);
        v.noalias() = pw * cols;
      }
      const auto term = detail::panel_nll_and_grad(v, ds, i, grad != nullptr);
      out.nll += term.nll;
      if (term.clamped) ++out.clamp_count;
      if (grad) {
        auto d = ddist.middleCols(static_cast<Eigen::Index>(i) * rows, rows);
        if (normal) {
          d.row(0) = v.colwise().sum();
          d.row(1).noalias() = z.transpose() * v;
        } else {
          d.noalias() = pw.transpose() * v;
        }
      }
    }
  } else {
    std::vector<double> val(j_count), p(j_count), pc(r_count);
    Eigen::MatrixXd probs(static_cast<Eigen::Index>(j_count), static_cast<Eigen::Index>(r_count));
    for (std::size_t task = 0; task < ds.num_tasks(); ++task) {
      const DrawGroup g = draws.group(task);
      const std::size_t base = task * j_count;
      const auto c = static_cast<std::size_t>(ds.chosen()[task]);
      double mean = 0.0;
      for (std::size_t r = 0; r < r_count; ++r) {
        for (std::size_t j = 0; j < j_count; ++j) {
          const auto col = f.dist.col(static_cast<Eigen::Index>(base + j));
          val[j] = normal ? col(0) + col(1) * g.z(r, j) : fm_polynomial({col.data(), s_}, g.u(r, j));
        }
        logit_link(val, p);
        for (std::size_t j = 0; j < j_count; ++j) probs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)) = p[j];
        pc[r] = p[c];
        mean += p[c];
      }
      mean /= static_cast<double>(r_count);
      if (std::isnan(mean)) {
        out.nll = mean;
        continue;
      }
      if (mean < kProbabilityFloor) {
        out.nll -= std::log(kProbabilityFloor);
        ++out.clamp_count;
        continue;
      }
      out.nll -= std::log(mean);
      if (!grad) continue;
      const double scale = 1.0 / (static_cast<double>(r_count) * mean);
      for (std::size_t j = 0; j < j_count; ++j) {
        auto d = ddist.col(static_cast<Eigen::Index>(base + j));
        for (std::size_t r = 0; r < r_count; ++r) {
          // dNLL/dv_jr = P_r(c) (P_rj - y_j) / (R * mean)
          const double gv = scale * pc[r] *
                            (probs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)) - (j == c ? 1.0 : 0.0));
          if (normal) {
            d(0) += gv;
            d(1) += gv * g.z(r, j);
          } else {
            double pu = 1.0;
            const double u = g.u(r, j);
            for (std::size_t m = 0; m < s_; ++m) {
              d(static_cast<Eigen::Index>(m)) += gv * pu;
              pu *= u;
            }
          }
        }
      }
    }
  }
  if (grad) backward(params, x, f, ddist, *grad);
  return out;
}

std::vector<double> MaplModel::probabilities(const Eigen::VectorXd& params, std::span<const double> features,
                                             std::size_t j_count, const DrawGroup& g) const {
  if (features.size() != j_count * k_) throw ConfigError("task features must hold J x K values");
  if (g.draws < 1 || (g.dims != 1 && g.dims != j_count))
    throw ConfigError("MAPL probabilities need R x 1 shared draws or R x J per-alternative draws");
  const Eigen::Map<const Eigen::MatrixXd> x(features.data(), static_cast<Eigen::Index>(k_),
                                            static_cast<Eigen::Index>(j_count));
  const Eigen::MatrixXd dist = forward(params, x, EvalOptions{}, false).dist;
  const bool normal = is_normal(spec_);
  std::vector<double> val(j_count), p(j_count), mean(j_count, 0.0);
  for (std::size_t r = 0; r < g.draws; ++r) {
    for (std::size_t j = 0; j < j_count; ++j) {
      const std::size_t d = g.dims == 1 ? 0 : j;
      const auto col = dist.col(static_cast<Eigen::Index>(j));
      val[j] = normal ? col(0) + col(1) * g.z(r, d) : fm_polynomial({col.data(), s_}, g.u(r, d));
    }
    logit_link(val, p);
    for (std::size_t j = 0; j < j_count; ++j) mean[j] += p[j];
  }
  for (auto& m : mean) m /= static_cast<double>(g.draws);
  return mean;
}

Eigen::VectorXd MaplModel::linear_normal_from_mixed_logit(std::span<const double> fixed_or_mean,
                                                          std::span<const double> sds) {
  if (fixed_or_mean.size() != sds.size()) throw ConfigError("means and sds must have the same length");
  const auto k = static_cast<Eigen::Index>(sds.size());
  Eigen::VectorXd p(2 * k + 1);
  for (Eigen::Index f = 0; f < k; ++f) {
    p[f] = fixed_or_mean[static_cast<std::size_t>(f)];
    p[k + 1 + f] = sds[static_cast<std::size_t>(f)];
  }
  p[k] = 0.0;
  return p;
}

std::vector<double> mapl_probabilities(const MaplModel& model, const Eigen::VectorXd& params,
                                       std::span<const double> task_features, std::size_t alternatives,
                                       const DrawGroup& draws) {
  return model.probabilities(params, task_features, alternatives, draws);
}

NllResult mapl_nll(const MaplModel& model, const Eigen::VectorXd& params, const ChoiceDataset& ds, std::size_t draws,
                   std::uint64_t seed, Eigen::VectorXd* grad) {
  const auto u = model.make_draws(ds, draws, seed, Stream::kTrainDraws);
  return model.nll(params, ds, u, EvalOptions{}, grad);
}

}  // namespace mapl
