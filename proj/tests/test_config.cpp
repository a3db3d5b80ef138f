#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hpiln/config.hpp"
#include "hpiln/core.hpp"
#include "hpiln/manifest.hpp"
#include "json.hpp"

using namespace hpiln;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hpiln_config_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parses key=value with comments and blanks") {
  const Config cfg = Config::parse_string(
      "# toy run\n"
      "\n"
      "seed = 42\n"
      "loss.kind = hpi   # objective\n"
      "loss.margin=0.35\n"
      "batch.p = 4\n");
  CHECK(cfg.get_uint("seed", 0) == 42);
  CHECK(cfg.get_string("loss.kind", "") == "hpi");
  CHECK(cfg.get_double("loss.margin", 0.0) == 0.35);
  CHECK(cfg.get_int("batch.p", 0) == 4);
  CHECK(cfg.has("batch.p"));
  CHECK_FALSE(cfg.has("batch.k"));
  CHECK(cfg.get_int("batch.k", 9) == 9);  // fallback
}

TEST_CASE("unknown keys are rejected with the line number") {
  try {
    Config::parse_string("seed = 1\nbogus.key = 2\n");
    FAIL("expected input_error");
  } catch (const input_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("bogus.key") != std::string::npos);
  }
}

TEST_CASE("lines without '=' are rejected") {
  CHECK_THROWS_AS(Config::parse_string("seed\n"), input_error);
}

TEST_CASE("every documented key parses") {
  std::string text;
  for (const auto& key : Config::known_keys()) text += key + " = 1\n";
  CHECK_NOTHROW(Config::parse_string(text));
  // The compare-losses list key is part of the documented set.
  CHECK_NOTHROW(Config::parse_string("compare.losses = id, hpi\n"));
}

TEST_CASE("typed getters validate their values") {
  const Config cfg = Config::parse_string("seed = x7\nloss.margin = wide\nbatch.p = -2\n");
  CHECK_THROWS_AS(cfg.get_uint("seed", 0), input_error);
  CHECK_THROWS_AS(cfg.get_double("loss.margin", 0.0), input_error);
  CHECK(cfg.get_int("batch.p", 0) == -2);
  CHECK_THROWS_AS(cfg.get_uint("batch.p", 0), input_error);
  CHECK(cfg.get_optional_double("train.iterations") == std::nullopt);
}

TEST_CASE("list values split on commas and trim") {
  const Config cfg = Config::parse_string("compare.losses = id, hp ,hpi\n");
  CHECK(cfg.get_list("compare.losses", {}) == std::vector<std::string>{"id", "hp", "hpi"});
  CHECK(cfg.get_list("eval.exclusions", {"3:2"}) == std::vector<std::string>{"3:2"});
}

TEST_CASE("parse_file reads from disk") {
  TempDir tmp;
  const fs::path p = tmp.path / "run.cfg";
  std::ofstream(p) << "seed = 11\ntrain.iterations = 250\n";
  const Config cfg = Config::parse_file(p);
  CHECK(cfg.get_uint("seed", 0) == 11);
  CHECK(cfg.get_uint("train.iterations", 0) == 250);
  CHECK_THROWS_AS(Config::parse_file(tmp.path / "none.cfg"), input_error);
}

TEST_CASE("file digest is fnv-1a over the bytes") {
  TempDir tmp;
  const fs::path p = tmp.path / "blob";
  std::ofstream(p, std::ios::binary) << "hello";
  CHECK(file_digest(p) == "a430d84680aabd0b");
  std::ofstream(p, std::ios::binary | std::ios::trunc) << "";
  CHECK(file_digest(p) == "cbf29ce484222325");  // offset basis for empty input
  CHECK_THROWS_AS(file_digest(tmp.path / "absent"), input_error);
}

TEST_CASE("manifest lands on disk as structured json") {
  TempDir tmp;
  RunManifest manifest;
  manifest.tool_version = "0.1.0";
  manifest.command = "synth";
  manifest.seed = 17;
  manifest.config["synth.identities"] = "5";
  manifest.output_digests["out.emb"] = "a430d84680aabd0b";
  manifest.duration_seconds = 0.25;

  const fs::path p = tmp.path / "run.manifest.json";
  write_manifest(p, manifest);

  std::ifstream in(p);
  const auto parsed = nlohmann::json::parse(in);
  CHECK(parsed["tool_version"] == "0.1.0");
  CHECK(parsed["command"] == "synth");
  CHECK(parsed["seed"] == 17);
  CHECK(parsed["config"]["synth.identities"] == "5");
  CHECK(parsed["outputs"]["out.emb"] == "a430d84680aabd0b");
  CHECK(parsed["duration_seconds"] == 0.25);
}
