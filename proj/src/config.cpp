#include "hpiln/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hpiln/core.hpp"

namespace hpiln {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      // synthetic data
      "synth.identities", "synth.samples", "synth.dim", "synth.identity_spread",
      "synth.modality_offset", "synth.noise_sigma",
      // batch shape
      "batch.p", "batch.k",
      // loss
      "loss.kind", "loss.margin", "loss.cross_margin", "loss.identity_weight",
      // optimizer / loop
      "adam.lr", "adam.beta1", "adam.beta2", "adam.epsilon", "train.iterations",
      "train.hidden_dim", "train.output_dim", "train.holdout_fraction",
      // eval protocol
      "eval.mode", "eval.shot", "eval.trials", "eval.exclusions", "eval.max_rank",
      // loss comparison
      "compare.losses",
      // shared
      "seed",
  };
  return keys;
}

Config Config::parse_string(const std::string& text) {
  Config config;
  const auto& keys = known_keys();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw input_error("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw input_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    config.entries_[key] = value;
  }
  return config;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(),
                                         value);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    throw input_error("config key '" + key + "': '" + it->second + "' is not an integer");
  }
  return value;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(),
                                         value);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    throw input_error("config key '" + key + "': '" + it->second +
                      "' is not a non-negative integer");
  }
  return value;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto value = get_optional_double(key);
  return value.value_or(fallback);
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(),
                                         value);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) {
    throw input_error("config key '" + key + "': '" + it->second + "' is not a number");
  }
  return value;
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::string> items;
  std::string current;
  std::istringstream in(it->second);
  while (std::getline(in, current, ',')) {
    current = trim(current);
    if (!current.empty()) items.push_back(current);
  }
  return items;
}

}  // namespace hpiln
