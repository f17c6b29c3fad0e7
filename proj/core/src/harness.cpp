#include "mapl/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mapl/choice_data.hpp"
#include "mapl/error.hpp"
#include "mapl/fit.hpp"
#include "mapl/rng.hpp"

namespace mapl {

namespace fs = std::filesystem;

void ExperimentPlan::validate() const {
  if (dgps.empty() || models.empty()) throw ConfigError("plan needs at least one DGP and one model");
  if (replications < 1) throw ConfigError("plan needs at least one replication");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  for (const auto& d : dgps) d.validate();
  for (const auto& m : models) m.validate();
  sim.validate();
  train.validate();
}

ExperimentPlan make_plan(const RunConfig& cfg, bool sweep) {
  ExperimentPlan plan;
  for (auto s : cfg.experiment.dgps) {
    DgpSpec d = cfg.dgp;
    d.scenario = s;
    plan.dgps.push_back(d);
  }
  for (const auto& name : cfg.experiment.models) plan.models.push_back(cfg.resolve_model(name));
  plan.replications = cfg.experiment.replications;
  plan.sim = cfg.sim;
  plan.train = cfg.train;
  plan.base_seed = cfg.experiment.base_seed;
  plan.train_fraction = cfg.experiment.train_fraction;
  if (sweep) plan.sizes = cfg.experiment.sizes;
  plan.validate();
  return plan;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::string_view dgp_label, std::size_t rep) noexcept {
  return hash_combine(hash_combine(base_seed, hash_string(dgp_label)), rep);
}

std::vector<RunUnit> enumerate_units(const ExperimentPlan& plan) {
  std::vector<std::size_t> sizes = plan.sizes;
  if (sizes.empty()) sizes.push_back(plan.sim.n_individuals);
  std::vector<RunUnit> units;
  for (auto n : sizes)
    for (std::size_t d = 0; d < plan.dgps.size(); ++d)
      for (std::size_t r = 0; r < plan.replications; ++r)
        for (std::size_t m = 0; m < plan.models.size(); ++m) units.push_back({d, m, r, n});
  return units;
}

namespace {

std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  return s;
}

}  // namespace

ReplicationResult run_unit(const ExperimentPlan& plan, const RunUnit& unit) {
  const auto start = std::chrono::steady_clock::now();
  const DgpSpec& dgp = plan.dgps.at(unit.dgp);
  const ModelSpec& spec = plan.models.at(unit.model);
  ReplicationResult row;
  row.dgp = dgp.label();
  row.model = spec.display_label();
  row.rep = unit.rep;
  row.n_individuals = unit.n_individuals;
  row.cell_seed = cell_seed(plan.base_seed, row.dgp, unit.rep);
  try {
    SimConfig sim = plan.sim;
    sim.n_individuals = unit.n_individuals;
    sim.seed = row.cell_seed;
    const auto data = simulate_dataset(dgp, sim).data;
    const auto split = split_individuals(data, plan.train_fraction,
                                         hash_combine(row.cell_seed, static_cast<std::uint64_t>(Stream::kSplit)));
    const auto truth = true_loglik(dgp, split.test, sim.oracle_draws,
                                   hash_combine(row.cell_seed, static_cast<std::uint64_t>(Stream::kOracle)));

    TrainConfig tcfg = plan.train;
    tcfg.seed = hash_combine(row.cell_seed, hash_string(row.model));
    const auto fitted = fit(spec, split.train, split.test, tcfg);
    const auto model = make_model(spec, data.num_features());
    const auto test = evaluate(*model, fitted.params, split.test, spec.draws_eval, hash_combine(tcfg.seed, hash_string("test")));
    const auto train = evaluate(*model, fitted.params, split.train, spec.draws_eval, hash_combine(tcfg.seed, hash_string("train")));

    const double test_obs = static_cast<double>(split.test.num_tasks());
    row.train_nll_per_obs = train.nll / static_cast<double>(split.train.num_tasks());
    row.test_nll_per_obs = test.nll / test_obs;
    row.true_test_nll_per_obs = -truth.loglik / test_obs;
    row.pct_error = pct_error(-test.nll, truth.loglik);
    row.clamp_count = test.clamp_count + truth.clamp_count;
    if (!std::isfinite(row.pct_error)) throw NumericalError("non-finite percent error");
  } catch (const std::exception& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.train_nll_per_obs = row.test_nll_per_obs = row.true_test_nll_per_obs = row.pct_error = nan;
    row.status = sanitize(std::string("failed: ") + e.what());
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::string format_result_row(const ReplicationResult& r) {
  std::string s;
  s += r.dgp + ',' + r.model + ',' + std::to_string(r.rep) + ',' + std::to_string(r.n_individuals) + ',';
  s += format_double(r.train_nll_per_obs) + ',' + format_double(r.test_nll_per_obs) + ',';
  s += format_double(r.true_test_nll_per_obs) + ',' + format_double(r.pct_error) + ',';
  s += std::to_string(r.clamp_count) + ',' + format_double(r.wall_seconds) + ',';
  s += std::to_string(r.cell_seed) + ',' + sanitize(r.status);
  return s;
}

void write_results(const std::vector<ReplicationResult>& rows, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) out << format_result_row(r) << '\n';
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    const auto c = line.find(',', start);
    f.push_back(line.substr(start, c - start));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  return f;
}

template <class T>
T parse_number(const std::string& s, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("bad number '" + s + "' on results line " + std::to_string(line_no));
  return v;
}

ReplicationResult parse_row(const std::string& line, std::size_t line_no) {
  const auto f = split_fields(line);
  if (f.size() != 12) throw DataError("results line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields, expected 12");
  ReplicationResult r;
  r.dgp = f[0];
  r.model = f[1];
  r.rep = parse_number<std::size_t>(f[2], line_no);
  r.n_individuals = parse_number<std::size_t>(f[3], line_no);
  r.train_nll_per_obs = parse_number<double>(f[4], line_no);
  r.test_nll_per_obs = parse_number<double>(f[5], line_no);
  r.true_test_nll_per_obs = parse_number<double>(f[6], line_no);
  r.pct_error = parse_number<double>(f[7], line_no);
  r.clamp_count = parse_number<std::size_t>(f[8], line_no);
  r.wall_seconds = parse_number<double>(f[9], line_no);
  r.cell_seed = parse_number<std::uint64_t>(f[10], line_no);
  r.status = f[11];
  return r;
}

}  // namespace

std::vector<ReplicationResult> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw DataError("malformed results header");
  std::vector<ReplicationResult> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse_row(line, line_no));
  }
  return rows;
}

std::vector<ReplicationResult> read_results(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read results file: " + path.string());
  return read_results(in);
}

std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> index;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    const auto key = std::make_tuple(r.dgp, r.model, r.n_individuals);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({r.dgp, r.model, r.n_individuals, 0, {}});
      values.emplace_back();
    }
    values[it->second].push_back(r.pct_error);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    out[g].count = values[g].size();
    out[g].stats = summarize_boxplot(values[g]);
  }
  return out;
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << r.dgp << ',' << r.model << ',' << r.n << ',' << format_double(s.min) << ',' << format_double(s.q1) << ','
        << format_double(s.median) << ',' << format_double(s.q3) << ',' << format_double(s.max) << ','
        << format_double(s.mean) << '\n';
  }
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

using RowKey = std::tuple<std::string, std::string, std::size_t, std::size_t>;

RowKey key_of(const ReplicationResult& r) { return {r.dgp, r.model, r.rep, r.n_individuals}; }

RowKey key_of(const ExperimentPlan& plan, const RunUnit& u) {
  return {plan.dgps[u.dgp].label(), plan.models[u.model].display_label(), u.rep, u.n_individuals};
}

// Complete rows of an interrupted results file; a trailing partial line is dropped.
std::vector<ReplicationResult> read_complete_rows(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const auto last_nl = text.rfind('\n');
  text.resize(last_nl == std::string::npos ? 0 : last_nl + 1);
  std::istringstream is(text);
  return read_results(is);
}

void check_meta(const fs::path& meta_path, const RunOptions& opts) {
  if (!fs::exists(meta_path) || opts.config_hash.empty()) return;
  std::ifstream in(meta_path);
  const auto meta = nlohmann::json::parse(in, nullptr, false);
  if (meta.is_discarded() || !meta.contains("config_hash")) return;
  const auto prev = meta.at("config_hash").get<std::string>();
  if (prev != opts.config_hash)
    throw ConfigError("cannot resume: existing results were produced under config " + prev + ", this run is " +
                      opts.config_hash);
}

void write_meta(const fs::path& path, const RunOptions& opts, std::size_t units, std::size_t failed) {
  nlohmann::json meta;
  meta["command"] = opts.command;
  meta["config_hash"] = opts.config_hash;
  if (!opts.config_json.empty()) meta["config"] = nlohmann::json::parse(opts.config_json, nullptr, false);
  meta["units"] = units;
  meta["failed"] = failed;
  write_file_atomic(path, meta.dump(2) + "\n");
}

}  // namespace

std::vector<ReplicationResult> run_experiment(const ExperimentPlan& plan, const RunOptions& opts) {
  plan.validate();
  const auto units = enumerate_units(plan);
  const bool writing = !opts.out_dir.empty();
  const fs::path results_path = opts.out_dir / "results.csv";
  const fs::path meta_path = opts.out_dir / "results.meta.json";

  std::map<RowKey, ReplicationResult> done;
  if (writing) {
    fs::create_directories(opts.out_dir);
    if (opts.resume && fs::exists(results_path)) {
      check_meta(meta_path, opts);
      for (auto& r : read_complete_rows(results_path)) done.emplace(key_of(r), std::move(r));
    }
    write_meta(meta_path, opts, units.size(), 0);
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < units.size(); ++i)
    if (!done.contains(key_of(plan, units[i]))) pending.push_back(i);

  // Rows go to disk strictly in plan order, so an interrupted file is always a
  // prefix of the finished one.
  std::ofstream append;
  if (writing) {
    std::vector<ReplicationResult> kept;
    for (const auto& u : units)
      if (auto it = done.find(key_of(plan, u)); it != done.end()) kept.push_back(it->second);
    std::ostringstream ss;
    write_results(kept, ss);
    write_file_atomic(results_path, ss.str());
    append.open(results_path, std::ios::app | std::ios::binary);
    if (!append) throw DataError("cannot append to " + results_path.string());
  }

  std::vector<std::optional<ReplicationResult>> slots(pending.size());
  std::size_t next_write = 0;
  std::mutex mu;
  std::atomic<std::size_t> next_job{0};
  auto worker = [&] {
    for (std::size_t job = next_job++; job < pending.size(); job = next_job++) {
      auto row = run_unit(plan, units[pending[job]]);
      std::lock_guard lock(mu);
      slots[job] = std::move(row);
      while (next_write < slots.size() && slots[next_write]) {
        const auto& r = *slots[next_write];
        if (append.is_open()) append << format_result_row(r) << '\n' << std::flush;
        if (opts.on_row) opts.on_row(r);
        ++next_write;
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(opts.workers, pending.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (append.is_open()) append.close();

  std::vector<ReplicationResult> rows;
  rows.reserve(units.size());
  std::size_t p = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (p < pending.size() && pending[p] == i) {
      rows.push_back(std::move(*slots[p++]));
    } else {
      rows.push_back(done.at(key_of(plan, units[i])));
    }
  }

  if (writing) {
    std::ostringstream rs, ss;
    write_results(rows, rs);
    write_file_atomic(results_path, rs.str());
    write_summary(summarize(rows), ss);
    write_file_atomic(opts.out_dir / "summary.csv", ss.str());
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok() ? 0 : 1;
    write_meta(meta_path, opts, units.size(), failed);
  }
  return rows;
}

std::vector<ReplicationResult> run_misspec_experiment(const ExperimentPlan& plan, const RunOptions& opts) {
  ExperimentPlan p = plan;
  p.sizes.clear();
  return run_experiment(p, opts);
}

std::vector<ReplicationResult> run_sample_size_sweep(ExperimentPlan plan, const std::vector<std::size_t>& sizes,
                                                     const RunOptions& opts) {
  if (sizes.empty()) throw ConfigError("sweep needs at least one sample size");
  plan.sizes = sizes;
  return run_experiment(plan, opts);
}

}  // namespace mapl
