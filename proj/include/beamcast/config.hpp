#pragma once

// Plain-text configuration: one `key = value` per line, `#` starts a comment,
// lists are comma separated. Keys mirror the ScenarioConfig / SweepSpec fields;
// forecaster settings are prefixed with `lstm.` and `nar.`.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "beamcast/harness.hpp"

namespace beamcast {

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::filesystem::path& path);

/// Parses "key=value" (as given to --set).
std::pair<std::string, std::string> parse_assignment(const std::string& s);

struct RunConfig {
  ScenarioConfig scenario;
  SweepSpec sweep;
  LstmTrainConfig lstm = harness_lstm_config();
  NarConfig nar = harness_nar_config();
  double train_fraction = 0.8;
  int jobs = 0;  // <= 0: all hardware threads

  /// Seeds every stochastic stage.
  void set_seed(std::uint64_t seed);
};

/// Applies the entries in order; unknown keys and malformed values raise
/// InvalidConfig.
void apply_config(RunConfig& cfg, const ConfigMap& entries);
void apply_entry(RunConfig& cfg, const std::string& key, const std::string& value);

std::vector<std::string> known_config_keys();

}  // namespace beamcast
