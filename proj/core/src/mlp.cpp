#include "mapl/mlp.hpp"

#include <cmath>

#include "mapl/error.hpp"
#include "mapl/rng.hpp"

namespace mapl {

namespace {
constexpr double kNormEps = 1e-5;
}

void MlpConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("MLP input and output dims must be at least 1");
  for (auto h : hidden_dims)
    if (h < 1) throw ConfigError("MLP hidden dims must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
}

std::vector<MlpParams::Layer> MlpParams::layout(const MlpConfig& cfg) {
  cfg.validate();
  std::vector<Layer> layers;
  std::size_t offset = 0;
  std::size_t in = cfg.input_dim;
  auto add = [&](std::size_t out, bool hidden) {
    Layer l{};
    l.in = in;
    l.out = out;
    l.hidden = hidden;
    l.norm = hidden && cfg.use_layer_norm;
    l.w = offset;
    offset += in * out;
    l.b = offset;
    offset += out;
    if (l.norm) {
      l.gain = offset;
      offset += out;
      l.shift = offset;
      offset += out;
    }
    layers.push_back(l);
    in = out;
  };
  for (auto h : cfg.hidden_dims) add(h, true);
  add(cfg.output_dim, false);
  return layers;
}

std::size_t MlpParams::count(const MlpConfig& cfg) {
  const auto layers = layout(cfg);
  const auto& last = layers.back();
  return last.b + last.out;
}

MlpParams::MlpParams(MlpConfig cfg) : cfg_(std::move(cfg)), layers_(layout(cfg_)) {
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count(cfg_)));
  for (const auto& l : layers_)
    if (l.norm) values_.segment(static_cast<Eigen::Index>(l.gain), static_cast<Eigen::Index>(l.out)).setOnes();
}

MlpParams::MlpParams(MlpConfig cfg, Eigen::VectorXd values)
    : cfg_(std::move(cfg)), layers_(layout(cfg_)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != count(cfg_))
    throw ConfigError("MLP parameter vector has the wrong length");
}

MlpParams MlpParams::initialize(const MlpConfig& cfg) {
  MlpParams p(cfg);
  CounterRng rng(cfg.init_seed, Stream::kInit);
  for (std::size_t l = 0; l < p.layers_.size(); ++l) {
    const auto& layer = p.layers_[l];
    const double fan_in = static_cast<double>(layer.in);
    const double fan_out = static_cast<double>(layer.out);
    const double limit = layer.hidden ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    auto w = p.weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
  }
  return p;
}

Eigen::Map<const Eigen::MatrixXd> MlpParams::weight(std::size_t l) const {
  const auto& L = layers_[l];
  return {values_.data() + L.w, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
}
Eigen::Map<Eigen::MatrixXd> MlpParams::weight(std::size_t l) {
  const auto& L = layers_[l];
  return {values_.data() + L.w, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::bias(std::size_t l) const {
  const auto& L = layers_[l];
  return {values_.data() + L.b, static_cast<Eigen::Index>(L.out)};
}
Eigen::Map<Eigen::VectorXd> MlpParams::bias(std::size_t l) {
  const auto& L = layers_[l];
  return {values_.data() + L.b, static_cast<Eigen::Index>(L.out)};
}

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                            Mode mode, std::uint64_t dropout_seed, MlpCache* cache) {
  const auto& cfg = params.config();
  if (static_cast<std::size_t>(inputs.rows()) != cfg.input_dim)
    throw ConfigError("MLP input has " + std::to_string(inputs.rows()) + " rows, expected " +
                      std::to_string(cfg.input_dim));
  const Eigen::Index batch = inputs.cols();
  const bool dropout = mode == Mode::kTrain && cfg.dropout_rate > 0.0;
  const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);

  if (cache) {
    cache->hidden.assign(params.num_layers() - 1, {});
    cache->batch = static_cast<std::size_t>(batch);
    cache->num_params = params.size();
    cache->valid = true;
  }

  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l + 1 < params.num_layers(); ++l) {
    const auto& L = params.layer(l);
    Eigen::MatrixXd z = params.weight(l) * a;
    z.colwise() += params.bias(l);
    MlpCache::Hidden* h = cache ? &cache->hidden[l] : nullptr;
    if (L.norm) {
      const Eigen::RowVectorXd mean = z.colwise().mean();
      z.rowwise() -= mean;
      const Eigen::RowVectorXd inv_std =
          ((z.array().square().colwise().sum() / static_cast<double>(L.out)) + kNormEps).rsqrt().matrix();
      z.array().rowwise() *= inv_std.array();
      if (h) {
        h->xhat = z;
        h->inv_std = inv_std;
      }
      const Eigen::Map<const Eigen::VectorXd> gain(params.values().data() + L.gain, static_cast<Eigen::Index>(L.out));
      const Eigen::Map<const Eigen::VectorXd> shift(params.values().data() + L.shift, static_cast<Eigen::Index>(L.out));
      z.array().colwise() *= gain.array();
      z.colwise() += shift;
    }
    if (h) {
      h->input = std::move(a);
      h->pre_relu = z;
    }
    a = z.cwiseMax(0.0);
    if (dropout) {
      const CounterRng rng(dropout_seed, Stream::kDropout, l);
      Eigen::MatrixXd mask(a.rows(), a.cols());
      const auto rows = static_cast<std::uint64_t>(a.rows());
      for (Eigen::Index c = 0; c < a.cols(); ++c)
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
          const double u = to_open_unit(rng.at(static_cast<std::uint64_t>(c) * rows + static_cast<std::uint64_t>(r)));
          mask(r, c) = u < cfg.dropout_rate ? 0.0 : keep_scale;
        }
      a.array() *= mask.array();
      if (h) h->mask = std::move(mask);
    }
  }
  const std::size_t last = params.num_layers() - 1;
  Eigen::MatrixXd out = params.weight(last) * a;
  out.colwise() += params.bias(last);
  if (cache) cache->last_input = std::move(a);
  return out;
}

MlpForward mlp_forward(const MlpParams& params, std::span<const double> x, Mode mode,
                       std::uint64_t dropout_seed) {
  const Eigen::Map<const Eigen::MatrixXd> in(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  MlpForward result;
  result.output = mlp_forward(params, in, mode, dropout_seed, &result.cache).col(0);
  return result;
}

namespace {

// Shared reverse pass; writes the input gradient when `dinput` is non-null.
void backward_impl(const MlpParams& params, const MlpCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& upstream, Eigen::Ref<Eigen::VectorXd> grad,
                   Eigen::MatrixXd* dinput) {
  const auto& cfg = params.config();
  if (!cache.valid || cache.num_params != params.size() || cache.hidden.size() + 1 != params.num_layers())
    throw ConfigError("MLP cache does not match these parameters");
  if (static_cast<std::size_t>(upstream.rows()) != cfg.output_dim ||
      static_cast<std::size_t>(upstream.cols()) != cache.batch)
    throw ConfigError("upstream gradient shape does not match the cached forward pass");
  if (static_cast<std::size_t>(grad.size()) != params.size())
    throw ConfigError("gradient buffer has the wrong length");

  auto gview = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + offset, static_cast<Eigen::Index>(rows),
                                       static_cast<Eigen::Index>(cols));
  };

  const std::size_t last = params.num_layers() - 1;
  {
    const auto& L = params.layer(last);
    gview(L.w, L.out, L.in).noalias() += upstream * cache.last_input.transpose();
    gview(L.b, L.out, 1) += upstream.rowwise().sum();
  }
  Eigen::MatrixXd d = params.weight(last).transpose() * upstream;

  for (std::size_t l = last; l-- > 0;) {
    const auto& L = params.layer(l);
    const auto& h = cache.hidden[l];
    if (h.mask.size() != 0) d.array() *= h.mask.array();
    d.array() *= (h.pre_relu.array() > 0.0).cast<double>();
    if (L.norm) {
      const Eigen::Map<const Eigen::VectorXd> gain(params.values().data() + L.gain, static_cast<Eigen::Index>(L.out));
      gview(L.gain, L.out, 1) += (d.array() * h.xhat.array()).rowwise().sum().matrix();
      gview(L.shift, L.out, 1) += d.rowwise().sum();
      d.array().colwise() *= gain.array();
      const double inv_n = 1.0 / static_cast<double>(L.out);
      const Eigen::RowVectorXd mean_d = d.colwise().sum() * inv_n;
      const Eigen::RowVectorXd mean_dx = (d.array() * h.xhat.array()).colwise().sum().matrix() * inv_n;
      d.rowwise() -= mean_d;
      d.array() -= h.xhat.array().rowwise() * mean_dx.array();
      d.array().rowwise() *= h.inv_std.array();
    }
    gview(L.w, L.out, L.in).noalias() += d * h.input.transpose();
    gview(L.b, L.out, 1) += d.rowwise().sum();
    if (l > 0 || dinput) d = params.weight(l).transpose() * d;
  }
  if (dinput) *dinput = std::move(d);
}

}  // namespace

MlpGradients mlp_backward(const MlpParams& params, const MlpCache& cache,
                          const Eigen::Ref<const Eigen::MatrixXd>& upstream) {
  MlpGradients g;
  g.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  backward_impl(params, cache, upstream, g.params, &g.input);
  return g;
}

void mlp_backward_accumulate(const MlpParams& params, const MlpCache& cache,
                             const Eigen::Ref<const Eigen::MatrixXd>& upstream,
                             Eigen::Ref<Eigen::VectorXd> grad) {
  backward_impl(params, cache, upstream, grad, nullptr);
}

}  // namespace mapl
