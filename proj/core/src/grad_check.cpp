#include "mapl/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mapl/error.hpp"
#include "mapl/rng.hpp"

namespace mapl {

GradCheckResult grad_check(const LossFn& loss, const Eigen::VectorXd& x, double h, std::size_t max_coords,
                           std::uint64_t seed, double floor) {
  if (!(h > 0.0)) throw ConfigError("grad_check: step must be positive");
  const auto n = static_cast<std::size_t>(x.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  // Finite-difference noise grows with |loss|, so the floor does too.
  const double scaled_floor = floor * std::max(1.0, std::abs(loss(x, &grad)));

  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (max_coords > 0 && max_coords < n) {
    CounterRng rng(seed, Stream::kTest, 0);
    for (std::size_t i = 0; i < max_coords; ++i) std::swap(coords[i], coords[i + rng.below(n - i)]);
    coords.resize(max_coords);
  }

  GradCheckResult result;
  Eigen::VectorXd probe = x;
  for (std::size_t c : coords) {
    const auto idx = static_cast<Eigen::Index>(c);
    const double orig = probe[idx];
    probe[idx] = orig + h;
    const double up = loss(probe, nullptr);
    probe[idx] = orig - h;
    const double down = loss(probe, nullptr);
    probe[idx] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad[idx];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), scaled_floor});
    const double err = std::abs(analytic - numeric) / denom;
    if (err > result.max_rel_error || !std::isfinite(err)) {
      result.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      result.worst_index = c;
    }
    ++result.checked;
  }
  return result;
}

GradCheckResult grad_check(const MlpParams& params, std::span<const double> x, const OutputLossFn& loss,
                           double h, std::size_t max_coords, std::uint64_t seed) {
  if (max_coords > 0) max_coords = std::max<std::size_t>(max_coords, 200);
  const MlpConfig cfg = params.config();
  LossFn f = [&](const Eigen::VectorXd& values, Eigen::VectorXd* grad) {
    const MlpParams p(cfg, values);
    auto fwd = mlp_forward(p, x, Mode::kEval);
    Eigen::VectorXd dout(fwd.output.size());
    const double value = loss(fwd.output, grad ? &dout : nullptr);
    if (grad) {
      const Eigen::Map<const Eigen::MatrixXd> up(dout.data(), dout.size(), 1);
      *grad = mlp_backward(p, fwd.cache, up).params;
    }
    return value;
  };
  return grad_check(f, params.values(), h, max_coords, seed);
}

}  // namespace mapl
