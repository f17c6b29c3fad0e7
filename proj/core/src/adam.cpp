#include "mapl/adam.hpp"

#include <cmath>

#include "mapl/error.hpp"

namespace mapl {

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ConfigError("adam_step: shape mismatch between state, params and grads");
  if (!grads.allFinite()) throw NumericalError("adam_step: non-finite gradient");

  const auto& c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double m_scale = 1.0 / (1.0 - std::pow(c.beta1, t));
  const double v_scale = 1.0 / (1.0 - std::pow(c.beta2, t));
  params.array() -= c.lr * (state.m.array() * m_scale) / ((state.v.array() * v_scale).sqrt() + c.eps);
}

}  // namespace mapl
