#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mapl {

enum class Mode { kTrain, kEval };

struct MlpConfig {
  std::size_t input_dim = 3;
  std::vector<std::size_t> hidden_dims{64, 64};
  std::size_t output_dim = 1;
  double dropout_rate = 0.1;
  bool use_layer_norm = true;
  std::uint64_t init_seed = 0;

  void validate() const;
};

/// Weights of a ReLU multilayer perceptron, stored as one flat vector so that
/// optimizers and gradient checks treat them uniformly.
///
/// Each hidden layer is affine -> layer norm (optional) -> ReLU -> dropout.
/// The output layer is affine with no activation. Per layer the flat layout is
/// W (out x in, column-major), b (out), then gain (out) and shift (out) when
/// layer norm is enabled on a hidden layer.
class MlpParams {
 public:
  explicit MlpParams(MlpConfig cfg);
  MlpParams(MlpConfig cfg, Eigen::VectorXd values);

  /// He-uniform hidden weights, Glorot-uniform output weights, zero biases,
  /// unit gains, zero shifts.
  static MlpParams initialize(const MlpConfig& cfg);

  static std::size_t count(const MlpConfig& cfg);

  const MlpConfig& config() const noexcept { return cfg_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  struct Layer {
    std::size_t in, out;
    std::size_t w, b;            // offsets into the flat vector
    std::size_t gain, shift;     // valid when norm is true
    bool hidden, norm;
  };
  const Layer& layer(std::size_t l) const { return layers_[l]; }

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t l);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l);

 private:
  static std::vector<Layer> layout(const MlpConfig& cfg);

  MlpConfig cfg_;
  std::vector<Layer> layers_;
  Eigen::VectorXd values_;
};

/// Intermediate values retained by a forward pass for the backward pass.
struct MlpCache {
  struct Hidden {
    Eigen::MatrixXd input;    // in x B
    Eigen::MatrixXd xhat;     // normalized pre-activations (norm only)
    Eigen::RowVectorXd inv_std;
    Eigen::MatrixXd pre_relu;  // out x B
    Eigen::MatrixXd mask;      // dropout scale factors (train mode with p > 0)
  };
  std::vector<Hidden> hidden;
  Eigen::MatrixXd last_input;
  std::size_t batch = 0;
  std::size_t num_params = 0;
  bool valid = false;
};

/// Batched forward pass. Columns of `inputs` are samples (input_dim x B); the
/// result is output_dim x B. Dropout masks are a pure function of
/// (dropout_seed, layer, column, unit), so eval mode and dropout_rate = 0 are
/// deterministic.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                            Mode mode, std::uint64_t dropout_seed, MlpCache* cache);

struct MlpForward {
  Eigen::VectorXd output;
  MlpCache cache;
};

/// Single-sample convenience wrapper.
MlpForward mlp_forward(const MlpParams& params, std::span<const double> x, Mode mode,
                       std::uint64_t dropout_seed = 0);

struct MlpGradients {
  Eigen::VectorXd params;  // same layout as MlpParams::values()
  Eigen::MatrixXd input;   // input_dim x B
};

/// Exact reverse-mode gradients given dLoss/dOutput (output_dim x B).
/// Throws ConfigError when the cache does not match params or the upstream shape.
MlpGradients mlp_backward(const MlpParams& params, const MlpCache& cache,
                          const Eigen::Ref<const Eigen::MatrixXd>& upstream);

/// Accumulates parameter gradients into `grad` (must be sized) and skips the
/// input gradient.
void mlp_backward_accumulate(const MlpParams& params, const MlpCache& cache,
                             const Eigen::Ref<const Eigen::MatrixXd>& upstream,
                             Eigen::Ref<Eigen::VectorXd> grad);

}  // namespace mapl
