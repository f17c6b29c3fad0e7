#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "mapl/choice_data.hpp"
#include "mapl/models.hpp"
#include "mapl/training.hpp"

namespace mapl {

/// Seeds of one fit, all derived from TrainConfig::seed.
struct FitSeeds {
  std::uint64_t init = 0;
  std::uint64_t train_draws = 0;
  std::uint64_t valid_draws = 0;
  std::uint64_t dropout = 0;

  static FitSeeds derive(std::uint64_t train_seed) noexcept;
};

struct FittedModel {
  ModelSpec spec;
  Eigen::VectorXd params;
  TrainingTrace trace;
  FitSeeds seeds;
  std::size_t num_params = 0;
  std::size_t clamp_count = 0;  ///< clamps during the final validation evaluation
  double lr = 0.0;
};

/// Held-out evaluation in eval mode with draws_count fresh draws keyed by seed.
/// Returns the total NLL.
NllResult evaluate(const ChoiceModel& model, const Eigen::VectorXd& params, const ChoiceDataset& ds,
                   std::size_t draws_count, std::uint64_t seed);

/// Trains `spec` on `train` with full-batch Adam, tracking validation NLL per
/// observation on `valid` (R_eval draws), and returns the best checkpoint.
/// The step size is the model's own (ModelSpec::lr or nn_lr); tcfg.lr is ignored.
FittedModel fit(const ModelSpec& spec, const ChoiceDataset& train, const ChoiceDataset& valid,
                const TrainConfig& tcfg);

}  // namespace mapl
