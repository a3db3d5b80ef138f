#ifndef HPILN_MANIFEST_HPP_
#define HPILN_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace hpiln {

// Provenance record written next to every run's outputs: tool version, the
// effective configuration, seeds, input/output digests, wall-clock duration.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  double duration_seconds = 0.0;
};

// FNV-1a 64-bit digest of a file's bytes, hex-encoded.
std::string file_digest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace hpiln

#endif  // HPILN_MANIFEST_HPP_
