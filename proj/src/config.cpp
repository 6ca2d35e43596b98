#include "beamcast/config.hpp"

#include <charconv>
#include <functional>
#include <limits>
#include <sstream>

#include "beamcast/error.hpp"
#include "beamcast/io.hpp"

namespace beamcast {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw Error(Errc::InvalidConfig, "'" + key + "': cannot parse '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  const std::string s = trim(text);
  if (s.empty()) return out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <typename T, typename Field>
Setter number(Field field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_number<T>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"num_elements", number<int>([](RunConfig& c) -> int& { return c.scenario.array.num_elements; })},
      {"spacing_wavelengths",
       number<double>([](RunConfig& c) -> double& { return c.scenario.array.spacing_wavelengths; })},
      {"carrier_freq_hz", number<double>([](RunConfig& c) -> double& { return c.scenario.array.carrier_freq_hz; })},
      {"desired_azimuth_deg",
       number<double>([](RunConfig& c) -> double& { return c.scenario.desired_azimuth_deg; })},
      {"elevation_deg", number<double>([](RunConfig& c) -> double& { return c.scenario.elevation_deg; })},
      {"num_samples", number<int>([](RunConfig& c) -> int& { return c.scenario.num_samples; })},
      {"snr_db", number<double>([](RunConfig& c) -> double& { return c.scenario.snr_db; })},
      {"interferer_offsets_deg",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.scenario.interferer_offsets_deg = parse_list(k, v); }},
      {"inr_db", number<double>([](RunConfig& c) -> double& { return c.scenario.inr_db; })},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.set_seed(parse_number<std::uint64_t>(k, v));
       }},
      {"scenario_seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.scenario.seed; })},
      {"pulse_period", number<int>([](RunConfig& c) -> int& { return c.scenario.pulse_period; })},
      {"pulse_on_fraction", number<double>([](RunConfig& c) -> double& { return c.scenario.pulse_on_fraction; })},
      {"loading_relative", number<double>([](RunConfig& c) -> double& { return c.scenario.loading_relative; })},
      {"sample_rate_hz", number<double>([](RunConfig& c) -> double& { return c.scenario.sample_rate_hz; })},
      {"rsu_height_m", number<double>([](RunConfig& c) -> double& { return c.scenario.rsu_height_m; })},
      {"inter_site_distance_m",
       number<double>([](RunConfig& c) -> double& { return c.scenario.inter_site_distance_m; })},
      {"tx_power_dbm", number<double>([](RunConfig& c) -> double& { return c.scenario.tx_power_dbm; })},
      {"rsu_noise_figure_db", number<double>([](RunConfig& c) -> double& { return c.scenario.rsu_noise_figure_db; })},
      {"ue_noise_figure_db", number<double>([](RunConfig& c) -> double& { return c.scenario.ue_noise_figure_db; })},

      {"axis", [](RunConfig& c, const std::string&, const std::string& v) { c.sweep.axis = parse_axis(trim(v)); }},
      {"values", [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.values = parse_list(k, v); }},
      {"model",
       [](RunConfig& c, const std::string&, const std::string& v) { c.sweep.model = parse_model_choice(trim(v)); }},
      {"k", number<int>([](RunConfig& c) -> int& { return c.sweep.k; })},
      {"train_fraction", number<double>([](RunConfig& c) -> double& { return c.train_fraction; })},
      {"jobs", number<int>([](RunConfig& c) -> int& { return c.jobs; })},

      {"lstm.hidden_size", number<int>([](RunConfig& c) -> int& { return c.lstm.hidden_size; })},
      {"lstm.epochs", number<int>([](RunConfig& c) -> int& { return c.lstm.epochs; })},
      {"lstm.learning_rate", number<double>([](RunConfig& c) -> double& { return c.lstm.learning_rate; })},
      {"lstm.grad_clip", number<double>([](RunConfig& c) -> double& { return c.lstm.grad_clip; })},
      {"lstm.dropout", number<double>([](RunConfig& c) -> double& { return c.lstm.dropout; })},
      {"lstm.beta1", number<double>([](RunConfig& c) -> double& { return c.lstm.beta1; })},
      {"lstm.beta2", number<double>([](RunConfig& c) -> double& { return c.lstm.beta2; })},
      {"lstm.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.lstm.seed; })},

      {"nar.delays", number<int>([](RunConfig& c) -> int& { return c.nar.delays; })},
      {"nar.hidden_neurons", number<int>([](RunConfig& c) -> int& { return c.nar.hidden_neurons; })},
      {"nar.mu_init", number<double>([](RunConfig& c) -> double& { return c.nar.mu_init; })},
      {"nar.mu_increase", number<double>([](RunConfig& c) -> double& { return c.nar.mu_increase; })},
      {"nar.mu_decrease", number<double>([](RunConfig& c) -> double& { return c.nar.mu_decrease; })},
      {"nar.max_iterations", number<int>([](RunConfig& c) -> int& { return c.nar.max_iterations; })},
      {"nar.seed", number<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.nar.seed; })},
  };
  return table;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  scenario.seed = seed;
  lstm.seed = seed;
  nar.seed = seed;
}

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(Errc::InvalidConfig, "config file " + path.string() + " does not exist");
  return parse_config(read_text(path));
}

std::pair<std::string, std::string> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || trim(s.substr(0, eq)).empty())
    throw Error(Errc::InvalidConfig, "expected key=value, got '" + s + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

void apply_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void apply_config(RunConfig& cfg, const ConfigMap& entries) {
  // `seed` fans out to every stage, so it goes first and specific seeds win.
  if (const auto it = entries.find("seed"); it != entries.end()) apply_entry(cfg, it->first, it->second);
  for (const auto& [k, v] : entries)
    if (k != "seed") apply_entry(cfg, k, v);
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace beamcast
