#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mapl/choice_data.hpp"
#include "mapl/config.hpp"
#include "mapl/dgp.hpp"
#include "mapl/error.hpp"
#include "mapl/fit.hpp"
#include "mapl/harness.hpp"
#include "mapl/rng.hpp"

namespace mapl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  bool paper_scale = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--set", o.overrides, "Override a key, e.g. --set train.epochs=100")->take_all();
  app->add_flag("--paper-scale", o.paper_scale, "Use 10,000 individuals, 20 replications, 2,000 epochs");
}

RunConfig resolve(const CommonOptions& o, std::ostream& out) {
  RunConfig cfg = o.config.empty() ? parse_config("{}", o.overrides, o.paper_scale)
                                   : load_config(o.config, o.overrides, o.paper_scale);
  out << "config hash: " << config_hash(cfg) << '\n';
  return cfg;
}

json dgp_json(const DgpSpec& d) {
  return {{"scenario", scenario_name(d.scenario)}, {"beta0", d.beta0}, {"mu1", d.mu1},       {"mu2", d.mu2},
          {"sigma1", d.sigma1},                    {"sigma2", d.sigma2}, {"sigma12", d.sigma12}, {"beta3", d.beta3}};
}

int cmd_simulate(const CommonOptions& o, const std::string& out_path, bool with_truth, std::ostream& out) {
  const RunConfig cfg = resolve(o, out);
  const DgpSpec& dgp = cfg.require_dgp();
  const auto sim = simulate_dataset(dgp, cfg.sim);

  std::ostringstream csv;
  write_csv(sim.data, csv);
  write_file_atomic(out_path, csv.str());

  json meta;
  meta["config_hash"] = config_hash(cfg);
  meta["dgp"] = dgp_json(dgp);
  meta["sim"] = {{"n_individuals", cfg.sim.n_individuals},
                 {"tasks_per_individual", cfg.sim.tasks_per_individual},
                 {"alternatives", cfg.sim.alternatives},
                 {"oracle_draws", cfg.sim.oracle_draws},
                 {"seed", cfg.sim.seed}};
  if (with_truth) {
    const auto truth = true_loglik(dgp, sim.data, cfg.sim.oracle_draws,
                                   hash_combine(cfg.sim.seed, static_cast<std::uint64_t>(Stream::kOracle)));
    meta["true_loglik"] = truth.loglik;
    meta["oracle_clamp_count"] = truth.clamp_count;
    out << "true log-likelihood: " << format_double(truth.loglik) << '\n';
  }
  write_file_atomic(out_path + ".meta.json", meta.dump(2) + "\n");
  out << "wrote " << sim.data.num_rows() << " rows to " << out_path << '\n';
  return kExitOk;
}

json trace_json(const TrainingTrace& trace) {
  json a = json::array();
  for (const auto& c : trace.checkpoints)
    a.push_back({{"epoch", c.epoch},
                 {"train_nll_per_obs", c.train_nll_per_obs},
                 {"valid_nll_per_obs", c.valid_nll_per_obs},
                 {"wall_seconds", c.wall_seconds}});
  return a;
}

json spec_json(const ModelSpec& s) {
  json j = {{"kind", model_kind_name(s.kind)},
            {"label", s.display_label()},
            {"R_train", s.draws_train},
            {"R_eval", s.draws_eval},
            {"draw_scheme", draw_scheme_name(s.draw_scheme)}};
  if (s.kind == ModelKind::kMapl) {
    j["estimator"] = estimator_name(s.mapl_estimator);
    j["distribution"] = distribution_name(s.mapl_distribution);
    j["fm_order"] = s.fm_order;
    j["draw_coupling"] = coupling_name(s.draw_coupling);
  }
  if (s.uses_network()) j["hidden"] = s.kind == ModelKind::kDeepNn ? std::vector<std::size_t>(4, s.hidden.front()) : s.hidden;
  return j;
}

int cmd_fit(const CommonOptions& o, const std::string& data_path, const std::string& valid_path,
            const std::string& out_path, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(o, out);
  ModelSpec spec = cfg.model;
  spec.validate();

  auto load = [&](const std::string& path) {
    ChoiceDataset ds = read_csv(fs::path(path));
    const auto report = validate_dataset(ds);
    if (!report.ok()) throw DataError("invalid dataset " + path + ": " + report.violations.front());
    return ds;
  };
  const ChoiceDataset data = load(data_path);
  ChoiceDataset train, valid;
  if (valid_path.empty()) {
    auto split = split_individuals(data, cfg.experiment.train_fraction,
                                   hash_combine(cfg.train.seed, static_cast<std::uint64_t>(Stream::kSplit)));
    train = std::move(split.train);
    valid = std::move(split.test);
  } else {
    train = data;
    valid = load(valid_path);
  }

  json report;
  report["config_hash"] = config_hash(cfg);
  report["model"] = spec_json(spec);
  report["n_train_individuals"] = train.individuals();
  report["n_valid_individuals"] = valid.individuals();
  const auto model = make_model(spec, train.num_features());
  report["param_count"] = {{"total", model->num_params()},
                           {"per_alternative_head", model->distribution_param_count()}};
  const auto seeds = FitSeeds::derive(cfg.train.seed);
  report["seeds"] = {{"train", cfg.train.seed},
                     {"init", hash_combine(seeds.init, spec.nn_seed)},
                     {"train_draws", seeds.train_draws},
                     {"valid_draws", seeds.valid_draws},
                     {"dropout", seeds.dropout}};
  try {
    const FittedModel fitted = fit(spec, train, valid, cfg.train);
    report["status"] = "ok";
    report["lr"] = fitted.lr;
    report["epochs"] = cfg.train.epochs;
    report["best_epoch"] = fitted.trace.best_epoch;
    report["best_valid_nll_per_obs"] = fitted.trace.best_valid_nll_per_obs;
    report["final_train_nll_per_obs"] = fitted.trace.checkpoints.back().train_nll_per_obs;
    report["final_valid_nll_per_obs"] = fitted.trace.checkpoints.back().valid_nll_per_obs;
    report["clamp_count"] = fitted.clamp_count;
    report["trace"] = trace_json(fitted.trace);
    report["params"] = std::vector<double>(fitted.params.data(), fitted.params.data() + fitted.params.size());
  } catch (const TrainingDiverged& e) {
    report["status"] = "diverged";
    report["error"] = e.what();
    report["trace"] = trace_json(e.trace());
    write_file_atomic(out_path, report.dump(2) + "\n");
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  write_file_atomic(out_path, report.dump(2) + "\n");
  out << "best validation NLL/obs " << format_double(report["best_valid_nll_per_obs"].get<double>()) << " at epoch "
      << report["best_epoch"].get<std::size_t>() << "; report written to " << out_path << '\n';
  return kExitOk;
}

int cmd_experiment(const CommonOptions& o, bool sweep, const std::string& out_dir, bool resume, int workers,
                   std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(o, out);
  const ExperimentPlan plan = make_plan(cfg, sweep);
  RunOptions ro;
  ro.out_dir = out_dir;
  ro.resume = resume;
  ro.workers = workers > 0 ? static_cast<std::size_t>(workers) : cfg.experiment.workers;
  ro.config_hash = config_hash(cfg);
  ro.config_json = canonical_json(cfg);
  ro.command = sweep ? "sweep" : "experiment";
  const std::size_t total = enumerate_units(plan).size();
  std::size_t seen = 0;
  ro.on_row = [&](const ReplicationResult& r) {
    ++seen;
    out << '[' << seen << '/' << total << "] " << r.dgp << ' ' << r.model << " rep " << r.rep << " n "
        << r.n_individuals << ": ";
    if (r.ok())
      out << "pct_error " << std::fixed << std::setprecision(3) << r.pct_error << std::defaultfloat;
    else
      out << r.status;
    out << '\n' << std::flush;
  };
  const auto rows = run_experiment(plan, ro);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok() ? 0 : 1;
  out << "wrote " << rows.size() << " rows to " << (fs::path(out_dir) / "results.csv").string() << '\n';
  if (failed > 0) err << "warning: " << failed << " failed cell(s)\n";
  return kExitOk;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_report(const std::string& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read results file: " + path);
  const auto rows = read_results(in);
  const auto summary = summarize(rows);
  if (summary.empty()) {
    out << "no rows\n";
    return kExitOk;
  }
  const std::vector<std::string> head{"dgp", "model", "n", "reps", "min", "q1", "median", "q3", "max", "mean"};
  std::vector<std::vector<std::string>> table{head};
  for (const auto& s : summary) {
    const auto& b = s.stats;
    table.push_back({s.dgp, s.model, std::to_string(s.n), std::to_string(s.count), fixed(b.min), fixed(b.q1),
                     fixed(b.median), fixed(b.q3), fixed(b.max), fixed(b.mean)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : table)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  for (const auto& r : table) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << "  ";
      // text columns left-aligned, numbers right-aligned
      if (c < 2)
        out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
      else
        out << std::right << std::setw(static_cast<int>(width[c])) << r[c];
    }
    out << '\n';
  }
  out << std::left;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-choice estimation with aggregate preference logit models", "mapl"};
  app.require_subcommand(1);

  CommonOptions sim_o, fit_o, exp_o, sweep_o;
  std::string sim_out, fit_data, fit_valid, fit_out, exp_out, sweep_out, report_path;
  bool with_truth = false, exp_resume = false, sweep_resume = false;
  int exp_workers = 0, sweep_workers = 0;

  auto* sim = app.add_subcommand("simulate", "Simulate a panel choice dataset from a DGP");
  add_common(sim, sim_o);
  sim->add_option("-o,--out", sim_out, "Output dataset CSV")->required();
  sim->add_flag("--true-loglik", with_truth, "Record the truth-oracle log-likelihood in the sidecar");

  auto* fit_cmd = app.add_subcommand("fit", "Fit one model to a dataset");
  add_common(fit_cmd, fit_o);
  fit_cmd->add_option("-d,--data", fit_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--valid", fit_valid, "Validation CSV (default: individual-level split of --data)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("-o,--out", fit_out, "Report JSON")->required();

  auto* exp = app.add_subcommand("experiment", "Run the model x DGP misspecification grid");
  add_common(exp, exp_o);
  exp->add_option("-o,--out", exp_out, "Output directory")->required();
  exp->add_flag("--resume", exp_resume, "Keep completed rows and skip their cells");
  exp->add_option("--workers", exp_workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Run the sample-size sweep");
  add_common(sweep, sweep_o);
  sweep->add_option("-o,--out", sweep_out, "Output directory")->required();
  sweep->add_flag("--resume", sweep_resume, "Keep completed rows and skip their cells");
  sweep->add_option("--workers", sweep_workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Summarize a results CSV");
  report->add_option("results", report_path, "Results CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o, sim_out, with_truth, out);
    if (fit_cmd->parsed()) return cmd_fit(fit_o, fit_data, fit_valid, fit_out, out, err);
    if (exp->parsed()) return cmd_experiment(exp_o, false, exp_out, exp_resume, exp_workers, out, err);
    if (sweep->parsed()) return cmd_experiment(sweep_o, true, sweep_out, sweep_resume, sweep_workers, out, err);
    if (report->parsed()) return cmd_report(report_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace mapl::cli
