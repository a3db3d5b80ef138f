#include "hpiln/manifest.hpp"

#include <fstream>

#include "json.hpp"

#include "hpiln/core.hpp"

namespace hpiln {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string() + " for digest");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  static const char digits[] = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) {
    hex[i] = digits[(hash >> (60 - 4 * i)) & 0xF];
  }
  hex[16] = '\0';
  return std::string(hex);
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["tool_version"] = manifest.tool_version;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : manifest.config) j["config"][key] = value;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [name, digest] : manifest.input_digests) j["inputs"][name] = digest;
  j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [name, digest] : manifest.output_digests) j["outputs"][name] = digest;
  j["duration_seconds"] = manifest.duration_seconds;

  std::ofstream out(path);
  if (!out) throw input_error("cannot write manifest " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace hpiln
