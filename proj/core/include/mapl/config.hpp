#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mapl/dgp.hpp"
#include "mapl/models.hpp"
#include "mapl/training.hpp"

namespace mapl {

struct ExperimentConfig {
  std::vector<Scenario> dgps{Scenario::kIndependentNormals, Scenario::kNormalsWithNonlinear};
  /// Model presets (see model_preset).
  std::vector<std::string> models{"mnl", "mxl", "simple_nn", "deep_nn", "mapl_normal", "mapl_fm"};
  std::size_t replications = 5;
  std::uint64_t base_seed = 20'240'501;
  std::vector<std::size_t> sizes{500, 2'000, 4'000};
  double train_fraction = 0.8;
  std::size_t workers = 1;
};

/// Everything a command needs, resolved from a JSON file plus overrides.
/// Defaults are desk scale: 2,000 individuals, 500 epochs, 5 replications.
struct RunConfig {
  DgpSpec dgp;
  bool has_scenario = false;
  SimConfig sim;
  ModelSpec model;  ///< the single model used by `fit`
  std::string model_kind = "mnl";
  TrainConfig train;
  ExperimentConfig experiment;

  RunConfig();

  /// Throws ConfigError("missing key: dgp.scenario") when no scenario was given.
  const DgpSpec& require_dgp() const;

  /// Applies the shared model options (draw counts, MAPL and network settings,
  /// step sizes) to a preset.
  ModelSpec resolve_model(std::string_view preset) const;
};

/// Parses a JSON document. Unknown sections or keys are rejected.
RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {},
                       bool paper_scale = false);
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {},
                      bool paper_scale = false);

/// Canonical JSON of the resolved configuration (sorted keys, no whitespace).
std::string canonical_json(const RunConfig& cfg);

/// 16 hex digits of a stable hash of canonical_json(cfg).
std::string config_hash(const RunConfig& cfg);

}  // namespace mapl
