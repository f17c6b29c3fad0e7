#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../tools/cli.hpp"
#include "mapl/harness.hpp"
#include "test_util.hpp"

using namespace mapl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run mapl_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kTiny = std::string(MAPL_TEST_DATA_DIR) + "/tiny.csv";

const std::vector<std::string> kSmallPlan{
    "--set", "sim.n_individuals=16", "--set", "sim.tasks_per_individual=3", "--set", "sim.oracle_draws=50",
    "--set", "model.R_train=10",     "--set", "model.R_eval=20",            "--set", "train.epochs=15",
    "--set", "experiment.replications=2", "--set", "experiment.dgps=[\"independent_normals\"]",
    "--set", "experiment.models=[\"mnl\"]"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes the dataset and sidecar") {
  const auto dir = test::scratch_dir("cli_sim");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  const std::vector<std::string> args{"simulate", "--set", "dgp.scenario=independent_normals", "--set",
                                      "sim.n_individuals=200", "--true-loglik", "-o"};
  const auto r = mapl_cli(with(args, {a}));
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("config hash: ", 0) == 0);
  std::ifstream in(a);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 200 * 10 * 3 + 1);
  const auto meta = nlohmann::json::parse(test::slurp(a + ".meta.json"));
  CHECK(meta.contains("true_loglik"));
  CHECK(meta.at("dgp").at("scenario") == "independent_normals");

  REQUIRE(mapl_cli(with(args, {b})).code == 0);
  CHECK(test::slurp(a) == test::slurp(b));
}

TEST_CASE("simulate without a scenario") {
  const auto dir = test::scratch_dir("cli_sim_missing");
  const auto r = mapl_cli({"simulate", "-o", (dir / "x.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("missing key: dgp.scenario") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(mapl_cli({}).code == 2);
  CHECK(mapl_cli({"frobnicate"}).code == 2);
  CHECK(mapl_cli({"simulate", "--bogus-flag", "-o", "x.csv"}).code == 2);
  CHECK(mapl_cli({"fit", "-d", "/nonexistent.csv", "-o", "x.json"}).code == 2);
}

TEST_CASE("fit MNL on the bundled dataset") {
  const auto dir = test::scratch_dir("cli_fit");
  const auto out = (dir / "mnl.json").string();
  const auto r = mapl_cli({"fit", "-d", kTiny, "--set", "train.epochs=60", "--set", "train.eval_every=5", "-o", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("config hash: ", 0) == 0);
  const auto j = nlohmann::json::parse(test::slurp(out));
  CHECK(j.at("status") == "ok");
  CHECK(j.at("param_count").at("total") == 3);
  const auto& trace = j.at("trace");
  REQUIRE(trace.size() == 13);
  CHECK(trace.back().at("train_nll_per_obs").get<double>() < trace.front().at("train_nll_per_obs").get<double>());
  for (std::size_t k = 1; k < trace.size(); ++k)
    CHECK(trace[k].at("train_nll_per_obs").get<double>() <= trace[k - 1].at("train_nll_per_obs").get<double>());
}

TEST_CASE("fit MAPL-FM reports twelve parameters per alternative head") {
  const auto dir = test::scratch_dir("cli_fit_fm");
  const auto out = (dir / "fm.json").string();
  const auto r = mapl_cli({"fit", "-d", kTiny, "--set", "model.kind=mapl", "--set", "mapl.distribution=fosgerau_mabit",
                           "--set", "train.epochs=5", "--set", "model.R_train=10", "--set", "model.R_eval=10", "-o", out});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(test::slurp(out));
  CHECK(j.at("param_count").at("per_alternative_head") == 12);
  CHECK(j.at("model").at("distribution") == "fosgerau_mabit");
}

TEST_CASE("fit rejects an unknown model kind") {
  const auto dir = test::scratch_dir("cli_fit_bad");
  const auto r = mapl_cli({"fit", "-d", kTiny, "--set", "model.kind=probit", "-o", (dir / "x.json").string()});
  CHECK(r.code == 2);
}

TEST_CASE("fit divergence exits 3 with a partial report") {
  const auto dir = test::scratch_dir("cli_fit_div");
  const auto out = (dir / "nn.json").string();
  const auto r = mapl_cli({"fit", "-d", kTiny, "--set", "model.kind=simple_nn", "--set", "nn.lr=1e300", "--set",
                           "train.epochs=50", "-o", out});
  CHECK(r.code == 3);
  const auto j = nlohmann::json::parse(test::slurp(out));
  CHECK(j.at("status") == "diverged");
}

TEST_CASE("experiment writes results and summary, and report prints them") {
  const auto dir = test::scratch_dir("cli_exp");
  const auto r = mapl_cli(with({"experiment", "-o", dir.string()}, kSmallPlan));
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("config hash: ", 0) == 0);
  const auto rows = read_results(dir / "results.csv");
  CHECK(rows.size() == 2);
  std::istringstream summary(test::slurp(dir / "summary.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(summary, l);) lines.push_back(l);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == kSummaryHeader);
  CHECK(lines[1].rfind("independent_normals,MNL,16,", 0) == 0);

  const auto rep = mapl_cli({"report", (dir / "results.csv").string()});
  CHECK(rep.code == 0);
  std::istringstream table(rep.out);
  std::vector<std::string> tl;
  for (std::string l; std::getline(table, l);) tl.push_back(l);
  REQUIRE(tl.size() == 2);  // header and one group
  CHECK(tl[1].find("MNL") != std::string::npos);
}

TEST_CASE("interrupted experiment resumes to the same file") {
  const auto full = test::scratch_dir("cli_resume_full");
  const auto cut = test::scratch_dir("cli_resume_cut");
  REQUIRE(mapl_cli(with({"experiment", "-o", full.string()}, kSmallPlan)).code == 0);
  // simulate a kill after the first row
  std::istringstream in(test::slurp(full / "results.csv"));
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  std::ofstream(cut / "results.csv") << header << '\n' << first << '\n';
  const auto r = mapl_cli(with({"experiment", "--resume", "-o", cut.string()}, kSmallPlan));
  REQUIRE(r.code == 0);
  const auto a = read_results(full / "results.csv"), b = read_results(cut / "results.csv");
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    auto x = a[k], y = b[k];
    x.wall_seconds = y.wall_seconds = 0.0;
    CHECK(format_result_row(x) == format_result_row(y));
  }
}

TEST_CASE("sweep over sizes") {
  const auto dir = test::scratch_dir("cli_sweep");
  const auto r = mapl_cli(with(with({"sweep", "-o", dir.string()}, kSmallPlan),
                               {"--set", "experiment.sizes=[8,16]", "--set", "experiment.replications=1"}));
  REQUIRE(r.code == 0);
  const auto rows = read_results(dir / "results.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_individuals == 8);
  CHECK(rows[1].n_individuals == 16);
}

TEST_CASE("report edge cases") {
  const auto dir = test::scratch_dir("cli_report");
  std::ofstream(dir / "empty.csv") << kResultsHeader << '\n';
  const auto e = mapl_cli({"report", (dir / "empty.csv").string()});
  CHECK(e.code == 0);
  CHECK(e.out.find("no rows") != std::string::npos);

  std::ofstream(dir / "bad.csv") << "dgp,model,whatever\n";
  CHECK(mapl_cli({"report", (dir / "bad.csv").string()}).code == 2);
}

}
