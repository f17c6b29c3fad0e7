#include <benchmark/benchmark.h>

#include "mapl/dgp.hpp"
#include "mapl/draws.hpp"
#include "mapl/mlp.hpp"
#include "mapl/models.hpp"

namespace {

mapl::ChoiceDataset bench_data(std::size_t n) {
  mapl::SimConfig cfg;
  cfg.n_individuals = n;
  cfg.seed = 11;
  return mapl::simulate_dataset(mapl::DgpSpec{}, cfg).data;
}

void BM_MlpForwardBackward(benchmark::State& state) {
  mapl::MlpConfig cfg;
  cfg.output_dim = 12;
  cfg.init_seed = 3;
  const auto params = mapl::MlpParams::initialize(cfg);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, state.range(0));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  const Eigen::MatrixXd up = Eigen::MatrixXd::Ones(12, state.range(0));
  for (auto _ : state) {
    mapl::MlpCache cache;
    auto out = mapl::mlp_forward(params, x, mapl::Mode::kTrain, 5, &cache);
    mapl::mlp_backward_accumulate(params, cache, up, grad);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(300)->Arg(3000);

void BM_ModelNll(benchmark::State& state, const char* preset) {
  const auto ds = bench_data(static_cast<std::size_t>(state.range(0)));
  const auto spec = mapl::model_preset(preset);
  const auto model = mapl::make_model(spec, ds.num_features());
  const auto params = model->initial_params(1);
  const auto draws = model->make_draws(ds, 200, 9, mapl::Stream::kTrainDraws);
  Eigen::VectorXd grad;
  for (auto _ : state) {
    auto r = model->nll(params, ds, draws, {}, &grad);
    benchmark::DoNotOptimize(r.nll);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_ModelNll, mnl, "mnl")->Arg(200);
BENCHMARK_CAPTURE(BM_ModelNll, mxl, "mxl")->Arg(200);
BENCHMARK_CAPTURE(BM_ModelNll, mapl_fm, "mapl_fm")->Arg(200);
BENCHMARK_CAPTURE(BM_ModelNll, mapl_normal, "mapl_normal")->Arg(200);

void BM_TrueLoglik(benchmark::State& state) {
  const auto ds = bench_data(200);
  for (auto _ : state) benchmark::DoNotOptimize(mapl::true_loglik(mapl::DgpSpec{}, ds, 1000, 4).loglik);
}
BENCHMARK(BM_TrueLoglik);

}  // namespace
BENCHMARK_MAIN();
