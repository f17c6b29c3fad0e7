#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace mapl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd m;  // first-moment accumulator
  Eigen::VectorXd v;  // second-moment accumulator
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, Eigen::Index size)
      : config(cfg), m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}
};

/// Bias-corrected Adam update in place. Throws NumericalError (leaving state and
/// params untouched) when any gradient entry is non-finite.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads);

}  // namespace mapl
