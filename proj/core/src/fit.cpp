#include "mapl/fit.hpp"

#include "mapl/rng.hpp"

namespace mapl {

FitSeeds FitSeeds::derive(std::uint64_t train_seed) noexcept {
  return {hash_combine(train_seed, static_cast<std::uint64_t>(Stream::kInit)),
          hash_combine(train_seed, static_cast<std::uint64_t>(Stream::kTrainDraws)),
          hash_combine(train_seed, static_cast<std::uint64_t>(Stream::kEvalDraws)),
          hash_combine(train_seed, static_cast<std::uint64_t>(Stream::kDropout))};
}

NllResult evaluate(const ChoiceModel& model, const Eigen::VectorXd& params, const ChoiceDataset& ds,
                   std::size_t draws_count, std::uint64_t seed) {
  const auto draws = model.make_draws(ds, draws_count, seed, Stream::kEvalDraws);
  return model.nll(params, ds, draws, EvalOptions{}, nullptr);
}

FittedModel fit(const ModelSpec& spec, const ChoiceDataset& train, const ChoiceDataset& valid,
                const TrainConfig& tcfg) {
  tcfg.validate();
  if (train.num_features() != valid.num_features() || train.alternatives() != valid.alternatives())
    throw ConfigError("train and validation data have different shapes");
  const auto model = make_model(spec, train.num_features());

  FittedModel out;
  out.spec = spec;
  out.seeds = FitSeeds::derive(tcfg.seed);
  out.seeds.init = hash_combine(out.seeds.init, spec.nn_seed);
  out.num_params = model->num_params();
  out.lr = model->learning_rate();

  const bool fixed_draws = spec.draw_scheme == DrawScheme::kFixedCommonRandomNumbers;
  UniformDraws train_draws;
  if (fixed_draws) train_draws = model->make_draws(train, spec.draws_train, out.seeds.train_draws, Stream::kTrainDraws);
  const auto valid_draws = model->make_draws(valid, spec.draws_eval, out.seeds.valid_draws, Stream::kEvalDraws);

  const double train_obs = static_cast<double>(train.num_tasks());
  const double valid_obs = static_cast<double>(valid.num_tasks());

  EpochLossFn loss = [&](const Eigen::VectorXd& p, std::size_t epoch, Eigen::VectorXd* grad) {
    UniformDraws epoch_draws;
    if (!fixed_draws)
      epoch_draws = model->make_draws(train, spec.draws_train, hash_combine(out.seeds.train_draws, epoch),
                                      Stream::kTrainDraws);
    const EvalOptions opts{Mode::kTrain, hash_combine(out.seeds.dropout, epoch)};
    const auto r = model->nll(p, train, fixed_draws ? train_draws : epoch_draws, opts, grad);
    if (grad) *grad /= train_obs;
    return r.nll / train_obs;
  };
  ValidFn vfn = [&](const Eigen::VectorXd& p) {
    return model->nll(p, valid, valid_draws, EvalOptions{}, nullptr).nll / valid_obs;
  };

  TrainConfig cfg = tcfg;
  cfg.lr = out.lr;
  auto res = train_loop(loss, model->initial_params(out.seeds.init), cfg, vfn);
  out.params = std::move(res.best_params);
  out.trace = std::move(res.trace);
  out.clamp_count = model->nll(out.params, valid, valid_draws, EvalOptions{}, nullptr).clamp_count;
  return out;
}

}  // namespace mapl
