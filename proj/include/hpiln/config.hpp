#ifndef HPILN_CONFIG_HPP_
#define HPILN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hpiln {

// Flat key=value config file. '#' starts a comment, blank lines are ignored.
// Unknown keys are rejected against the documented key set.
class Config {
 public:
  Config() = default;

  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Keys any CLI subcommand understands; parse rejects others.
  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace hpiln

#endif  // HPILN_CONFIG_HPP_
