#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mapl/error.hpp"

namespace mapl {

struct TrainConfig {
  std::size_t epochs = 2'000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;
  bool early_abort_on_nonfinite = true;

  void validate() const;
};

struct Checkpoint {
  std::size_t epoch = 0;
  double train_nll_per_obs = 0.0;
  double valid_nll_per_obs = 0.0;
  double wall_seconds = 0.0;
};

struct TrainingTrace {
  std::vector<Checkpoint> checkpoints;
  std::size_t best_epoch = 0;
  double best_valid_nll_per_obs = 0.0;
};

/// Thrown when the loss or its gradient becomes non-finite; carries the
/// checkpoints recorded so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, TrainingTrace trace, std::size_t epoch)
      : NumericalError(what), trace_(std::move(trace)), epoch_(epoch) {}
  const TrainingTrace& trace() const noexcept { return trace_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  TrainingTrace trace_;
  std::size_t epoch_;
};

/// Per-observation training objective at `params` for a given epoch (the epoch
/// selects dropout masks or fresh draws); writes the gradient when non-null.
using EpochLossFn = std::function<double(const Eigen::VectorXd& params, std::size_t epoch, Eigen::VectorXd* grad)>;

/// Per-observation validation loss (deterministic).
using ValidFn = std::function<double(const Eigen::VectorXd& params)>;

struct TrainResult {
  Eigen::VectorXd best_params;
  TrainingTrace trace;
};

/// Full-batch Adam for tcfg.epochs steps. A checkpoint is taken before the
/// update at every epoch divisible by eval_every and once more after the last
/// update; the parameters with the lowest validation loss among checkpoints are
/// returned.
TrainResult train_loop(const EpochLossFn& loss, const Eigen::VectorXd& init, const TrainConfig& tcfg,
                       const ValidFn& valid);

}  // namespace mapl
