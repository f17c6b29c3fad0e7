#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "mapl/mlp.hpp"

namespace mapl {

/// Loss with optional gradient output; the gradient pointer may be null.
using LossFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares the analytic gradient of `loss` at `x` to central differences with
/// step h. Relative error per coordinate is |a - n| / max(|a|, |n|, floor * max(1, |loss(x)|)).
/// When max_coords > 0 and smaller than the dimension, a seeded random subset of
/// coordinates is checked.
GradCheckResult grad_check(const LossFn& loss, const Eigen::VectorXd& x, double h,
                           std::size_t max_coords = 0, std::uint64_t seed = 0, double floor = 1e-6);

/// Scalar loss of the network output with its gradient w.r.t. the output.
using OutputLossFn = std::function<double(const Eigen::VectorXd& output, Eigen::VectorXd* doutput)>;

/// Gradient check of an MLP in eval mode at input x over all parameters (or a
/// random subsample of at least 200 coordinates when the net is larger than
/// max_coords).
GradCheckResult grad_check(const MlpParams& params, std::span<const double> x, const OutputLossFn& loss,
                           double h, std::size_t max_coords = 0, std::uint64_t seed = 0);

}  // namespace mapl
