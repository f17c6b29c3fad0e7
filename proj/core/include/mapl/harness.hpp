#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mapl/config.hpp"
#include "mapl/dgp.hpp"
#include "mapl/models.hpp"
#include "mapl/stats.hpp"
#include "mapl/training.hpp"

namespace mapl {

struct ExperimentPlan {
  std::vector<DgpSpec> dgps;
  std::vector<ModelSpec> models;
  std::size_t replications = 5;
  SimConfig sim;
  TrainConfig train;
  std::uint64_t base_seed = 0;
  double train_fraction = 0.8;
  /// Sample sizes to run; empty means sim.n_individuals only.
  std::vector<std::size_t> sizes;

  void validate() const;
};

/// Misspecification grid (sizes empty) or sample-size sweep over
/// experiment.sizes on the configured DGPs and models.
ExperimentPlan make_plan(const RunConfig& cfg, bool sweep);

struct ReplicationResult {
  std::string dgp;
  std::string model;
  std::size_t rep = 0;
  std::size_t n_individuals = 0;
  double train_nll_per_obs = 0.0;
  double test_nll_per_obs = 0.0;
  double true_test_nll_per_obs = 0.0;
  double pct_error = 0.0;
  std::size_t clamp_count = 0;
  double wall_seconds = 0.0;
  std::uint64_t cell_seed = 0;
  std::string status = "ok";

  bool ok() const noexcept { return status == "ok"; }
};

/// Stable hash of (base_seed, dgp label, replication index).
std::uint64_t cell_seed(std::uint64_t base_seed, std::string_view dgp_label, std::size_t rep) noexcept;

/// One (dgp, model, replication, size) unit of work. Units are enumerated in
/// plan order: size, then dgp, then replication, then model.
struct RunUnit {
  std::size_t dgp = 0;
  std::size_t model = 0;
  std::size_t rep = 0;
  std::size_t n_individuals = 0;
};
std::vector<RunUnit> enumerate_units(const ExperimentPlan& plan);

/// Simulates, splits, scores the truth oracle, fits, and evaluates one unit.
/// Depends only on the plan and the unit, never on other units. Failures are
/// returned as rows whose status starts with "failed:".
ReplicationResult run_unit(const ExperimentPlan& plan, const RunUnit& unit);

struct RunOptions {
  std::filesystem::path out_dir;  ///< empty: nothing is written
  bool resume = false;
  std::size_t workers = 1;
  std::string config_hash;
  std::string config_json;  ///< canonical config recorded in results.meta.json
  std::string command = "experiment";
  std::function<void(const ReplicationResult&)> on_row;
};

/// Runs every unit, appending rows to out_dir/results.csv in plan order as
/// they complete, then rewrites results.csv and summary.csv atomically and
/// writes results.meta.json. With resume, rows already present are kept and
/// their units skipped.
std::vector<ReplicationResult> run_experiment(const ExperimentPlan& plan, const RunOptions& opts);

std::vector<ReplicationResult> run_misspec_experiment(const ExperimentPlan& plan, const RunOptions& opts = {});
std::vector<ReplicationResult> run_sample_size_sweep(ExperimentPlan plan, const std::vector<std::size_t>& sizes,
                                                     const RunOptions& opts = {});

inline constexpr std::string_view kResultsHeader =
    "dgp,model,rep,n_individuals,train_nll_per_obs,test_nll_per_obs,true_test_nll_per_obs,pct_error,"
    "clamp_count,wall_seconds,cell_seed,status";
inline constexpr std::string_view kSummaryHeader = "dgp,model,n,min,q1,median,q3,max,mean";

std::string format_result_row(const ReplicationResult& r);
/// Throws DataError when the header or a row does not match the schema.
std::vector<ReplicationResult> read_results(std::istream& in);
std::vector<ReplicationResult> read_results(const std::filesystem::path& path);
void write_results(const std::vector<ReplicationResult>& rows, std::ostream& out);

/// Boxplot statistics of pct_error per (dgp, model, n_individuals) over rows
/// with status ok, in order of first appearance. `n` is n_individuals.
struct SummaryRow {
  std::string dgp;
  std::string model;
  std::size_t n = 0;
  std::size_t count = 0;
  BoxplotStats stats;
};
std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& rows);
void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mapl
