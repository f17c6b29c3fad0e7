#include "mapl/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "mapl/adam.hpp"

namespace mapl {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (eval_every < 1) throw ConfigError("train.eval_every must be at least 1");
}

TrainResult train_loop(const EpochLossFn& loss, const Eigen::VectorXd& init, const TrainConfig& tcfg,
                       const ValidFn& valid) {
  tcfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  TrainResult res;
  res.best_params = init;
  Eigen::VectorXd params = init;
  Eigen::VectorXd grad;
  AdamState adam(AdamConfig{.lr = tcfg.lr}, params.size());
  bool have_best = false;

  auto diverged = [&](const std::string& what, std::size_t epoch) {
    return TrainingDiverged(what + " at epoch " + std::to_string(epoch), res.trace, epoch);
  };

  auto checkpoint = [&](std::size_t epoch, double train_loss) {
    const double v = valid(params);
    if (!std::isfinite(v)) {
      if (tcfg.early_abort_on_nonfinite) throw diverged("non-finite validation loss", epoch);
      return;
    }
    res.trace.checkpoints.push_back({epoch, train_loss, v, elapsed()});
    if (!have_best || v < res.trace.best_valid_nll_per_obs) {
      have_best = true;
      res.trace.best_valid_nll_per_obs = v;
      res.trace.best_epoch = epoch;
      res.best_params = params;
    }
  };

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double l = loss(params, epoch, &grad);
    if (!std::isfinite(l) || !grad.allFinite()) {
      if (tcfg.early_abort_on_nonfinite) throw diverged("non-finite training loss", epoch);
      continue;
    }
    if (epoch % tcfg.eval_every == 0) checkpoint(epoch, l);
    adam_step(adam, params, grad);
  }
  const double final_loss = loss(params, tcfg.epochs, nullptr);
  if (!std::isfinite(final_loss)) {
    if (tcfg.early_abort_on_nonfinite) throw diverged("non-finite training loss", tcfg.epochs);
  } else {
    checkpoint(tcfg.epochs, final_loss);
  }
  if (!have_best) throw diverged("no finite checkpoint", tcfg.epochs);
  return res;
}

}  // namespace mapl
