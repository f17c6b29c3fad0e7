#include "mapl/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mapl/error.hpp"
#include "mapl/rng.hpp"

namespace mapl {

using nlohmann::json;

RunConfig::RunConfig() {
  sim.n_individuals = 2'000;
  train.epochs = 500;
}

const DgpSpec& RunConfig::require_dgp() const {
  if (!has_scenario) throw ConfigError("missing key: dgp.scenario");
  return dgp;
}

ModelSpec RunConfig::resolve_model(std::string_view preset) const {
  ModelSpec s = model_preset(preset);
  s.draws_train = model.draws_train;
  s.draws_eval = model.draws_eval;
  s.draw_scheme = model.draw_scheme;
  s.mxl_random_features = model.mxl_random_features;
  s.fm_order = model.fm_order;
  s.draw_coupling = model.draw_coupling;
  s.hidden = model.hidden;
  s.dropout = model.dropout;
  s.layer_norm = model.layer_norm;
  s.nn_lr = model.nn_lr;
  s.nn_seed = model.nn_seed;
  s.lr = model.lr;
  s.validate();
  return s;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"dgp", {"scenario", "beta0", "mu1", "mu2", "sigma1", "sigma2", "sigma12", "beta3"}},
      {"sim", {"n_individuals", "tasks_per_individual", "alternatives", "oracle_draws", "seed"}},
      {"model", {"kind", "label", "R_train", "R_eval", "draw_scheme", "random_features"}},
      {"mapl", {"estimator", "distribution", "fm_order", "draw_coupling"}},
      {"nn", {"hidden", "dropout", "layer_norm", "lr", "seed"}},
      {"train", {"epochs", "lr", "seed", "eval_every"}},
      {"experiment", {"dgps", "models", "replications", "base_seed", "sizes", "train_fraction", "workers"}},
  };
  return s;
}

void check_schema(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [section, body] : j.items()) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown config section: " + section);
    if (!body.is_object()) throw ConfigError("config section must be an object: " + section);
    for (const auto& [key, value] : body.items())
      if (!it->second.contains(key)) throw ConfigError("unknown config key: " + section + "." + key);
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos || path.find('.', dot + 1) != std::string::npos)
    throw ConfigError("override key must be section.key: " + path);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  j[path.substr(0, dot)][path.substr(dot + 1)] = std::move(value);
}

template <class T>
void read(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(section) || !j.at(section).contains(key)) return;
  try {
    out = j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for key: ") + section + "." + key);
  }
}

template <class T, class F>
void read_as(const json& j, const char* section, const char* key, T& out, F parse) {
  std::string name;
  read(j, section, key, name);
  if (!name.empty()) out = parse(name);
}

RunConfig from_json(const json& j) {
  check_schema(j);
  RunConfig c;

  if (j.contains("dgp") && j.at("dgp").contains("scenario")) {
    read_as(j, "dgp", "scenario", c.dgp.scenario, parse_scenario);
    c.has_scenario = true;
  }
  read(j, "dgp", "beta0", c.dgp.beta0);
  read(j, "dgp", "mu1", c.dgp.mu1);
  read(j, "dgp", "mu2", c.dgp.mu2);
  read(j, "dgp", "sigma1", c.dgp.sigma1);
  read(j, "dgp", "sigma2", c.dgp.sigma2);
  read(j, "dgp", "sigma12", c.dgp.sigma12);
  read(j, "dgp", "beta3", c.dgp.beta3);

  read(j, "sim", "n_individuals", c.sim.n_individuals);
  read(j, "sim", "tasks_per_individual", c.sim.tasks_per_individual);
  read(j, "sim", "alternatives", c.sim.alternatives);
  read(j, "sim", "oracle_draws", c.sim.oracle_draws);
  read(j, "sim", "seed", c.sim.seed);

  ModelSpec& m = c.model;
  read(j, "model", "kind", c.model_kind);
  read(j, "model", "label", m.label);
  read(j, "model", "R_train", m.draws_train);
  read(j, "model", "R_eval", m.draws_eval);
  read_as(j, "model", "draw_scheme", m.draw_scheme, parse_draw_scheme);
  read(j, "model", "random_features", m.mxl_random_features);
  m.kind = parse_model_kind(c.model_kind);
  read_as(j, "mapl", "estimator", m.mapl_estimator, parse_estimator);
  read_as(j, "mapl", "distribution", m.mapl_distribution, parse_distribution);
  read(j, "mapl", "fm_order", m.fm_order);
  read_as(j, "mapl", "draw_coupling", m.draw_coupling, parse_coupling);
  read(j, "nn", "hidden", m.hidden);
  read(j, "nn", "dropout", m.dropout);
  read(j, "nn", "layer_norm", m.layer_norm);
  read(j, "nn", "lr", m.nn_lr);
  read(j, "nn", "seed", m.nn_seed);
  read(j, "train", "lr", m.lr);

  read(j, "train", "epochs", c.train.epochs);
  read(j, "train", "seed", c.train.seed);
  read(j, "train", "eval_every", c.train.eval_every);

  auto& e = c.experiment;
  if (j.contains("experiment") && j.at("experiment").contains("dgps")) {
    std::vector<std::string> names;
    read(j, "experiment", "dgps", names);
    e.dgps.clear();
    for (const auto& n : names) e.dgps.push_back(parse_scenario(n));
  }
  read(j, "experiment", "models", e.models);
  read(j, "experiment", "replications", e.replications);
  read(j, "experiment", "base_seed", e.base_seed);
  read(j, "experiment", "sizes", e.sizes);
  read(j, "experiment", "train_fraction", e.train_fraction);
  read(j, "experiment", "workers", e.workers);

  c.dgp.validate();
  c.sim.validate();
  m.validate();
  c.train.validate();
  if (e.dgps.empty() || e.models.empty()) throw ConfigError("experiment.dgps and experiment.models must be nonempty");
  if (e.replications < 1) throw ConfigError("experiment.replications must be at least 1");
  if (!(e.train_fraction > 0.0 && e.train_fraction < 1.0))
    throw ConfigError("experiment.train_fraction must lie in (0, 1)");
  if (e.workers < 1) throw ConfigError("experiment.workers must be at least 1");
  for (const auto& name : e.models) (void)model_preset(name);
  for (auto n : e.sizes)
    if (n < 2) throw ConfigError("experiment.sizes entries must be at least 2");
  return c;
}

}  // namespace

RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides, bool paper_scale) {
  json j = json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (j.is_null()) j = json::object();
  if (paper_scale) {
    j["sim"]["n_individuals"] = 10'000;
    j["experiment"]["replications"] = 20;
    j["train"]["epochs"] = 2'000;
  }
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j);
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                      bool paper_scale) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, paper_scale);
}

std::string canonical_json(const RunConfig& c) {
  const ModelSpec& m = c.model;
  json j;
  if (c.has_scenario) j["dgp"]["scenario"] = scenario_name(c.dgp.scenario);
  j["dgp"]["beta0"] = c.dgp.beta0;
  j["dgp"]["mu1"] = c.dgp.mu1;
  j["dgp"]["mu2"] = c.dgp.mu2;
  j["dgp"]["sigma1"] = c.dgp.sigma1;
  j["dgp"]["sigma2"] = c.dgp.sigma2;
  j["dgp"]["sigma12"] = c.dgp.sigma12;
  j["dgp"]["beta3"] = c.dgp.beta3;
  j["sim"] = {{"n_individuals", c.sim.n_individuals},
              {"tasks_per_individual", c.sim.tasks_per_individual},
              {"alternatives", c.sim.alternatives},
              {"oracle_draws", c.sim.oracle_draws},
              {"seed", c.sim.seed}};
  j["model"] = {{"kind", c.model_kind},
                {"label", m.label},
                {"R_train", m.draws_train},
                {"R_eval", m.draws_eval},
                {"draw_scheme", draw_scheme_name(m.draw_scheme)},
                {"random_features", m.mxl_random_features}};
  j["mapl"] = {{"estimator", estimator_name(m.mapl_estimator)},
               {"distribution", distribution_name(m.mapl_distribution)},
               {"fm_order", m.fm_order},
               {"draw_coupling", coupling_name(m.draw_coupling)}};
  j["nn"] = {{"hidden", m.hidden},
             {"dropout", m.dropout},
             {"layer_norm", m.layer_norm},
             {"lr", m.nn_lr},
             {"seed", m.nn_seed}};
  j["train"] = {{"epochs", c.train.epochs}, {"lr", m.lr}, {"seed", c.train.seed}, {"eval_every", c.train.eval_every}};
  std::vector<std::string> dgps;
  for (auto s : c.experiment.dgps) dgps.emplace_back(scenario_name(s));
  // workers is excluded: results do not depend on it.
  j["experiment"] = {{"dgps", dgps},
                     {"models", c.experiment.models},
                     {"replications", c.experiment.replications},
                     {"base_seed", c.experiment.base_seed},
                     {"sizes", c.experiment.sizes},
                     {"train_fraction", c.experiment.train_fraction}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(canonical_json(cfg))));
  return buf;
}

}  // namespace mapl
