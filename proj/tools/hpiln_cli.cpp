// hpiln: command-line front end for the cross-modality metric-learning stack.
// Subcommands: synth, train, export, mine, gradcheck, eval, pipeline,
// compare-losses. Exit codes: 0 success, 1 usage, 2 input/data error,
// 3 numerical failure.
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hpiln/config.hpp"
#include "hpiln/core.hpp"
#include "hpiln/distance.hpp"
#include "hpiln/eval.hpp"
#include "hpiln/gradcheck.hpp"
#include "hpiln/io.hpp"
#include "hpiln/losses.hpp"
#include "hpiln/manifest.hpp"
#include "hpiln/mining.hpp"
#include "hpiln/model.hpp"
#include "hpiln/rng.hpp"
#include "hpiln/sampler.hpp"
#include "hpiln/synthetic.hpp"
#include "hpiln/trainer.hpp"
#include "hpiln/version.hpp"

namespace fs = std::filesystem;
using namespace hpiln;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::string out_dir = ".";
  bool verbose = false;
};

void log_stage(const GlobalOpts& g, const std::string& name) {
  if (g.verbose) std::cerr << "[" << name << "]" << std::endl;
}

// Output paths resolve against --out-dir; absolute paths win.
fs::path out_path(const GlobalOpts& g, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir / p;
}

Config load_config(const std::string& path) {
  if (path.empty()) return Config();
  return Config::parse_file(path);
}

std::uint64_t resolve_seed(const GlobalOpts& g, const Config& cfg) {
  if (g.seed_given) return g.seed;
  return cfg.get_uint("seed", 0);
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw numeric_error("float formatting failed");
  return std::string(buf, ptr);
}

// ---- config -> module structs ------------------------------------------

SyntheticSpec synth_spec_from(const Config& cfg, std::uint64_t root) {
  SyntheticSpec spec;
  spec.num_identities = cfg.get_uint("synth.identities", spec.num_identities);
  spec.samples_per_identity_per_modality =
      cfg.get_uint("synth.samples", spec.samples_per_identity_per_modality);
  spec.input_dim = cfg.get_uint("synth.dim", spec.input_dim);
  spec.identity_spread = cfg.get_double("synth.identity_spread", spec.identity_spread);
  spec.modality_offset = cfg.get_double("synth.modality_offset", spec.modality_offset);
  spec.noise_sigma = cfg.get_double("synth.noise_sigma", spec.noise_sigma);
  spec.seed = Rng::derive(root, "synth");
  return spec;
}

TrainConfig train_config_from(const Config& cfg, std::uint64_t root) {
  TrainConfig tc;
  // Desk-scale defaults; the paper-scale run is batch.p=8 batch.k=4
  // train.iterations=10000 in the config file.
  tc.batch.num_identities = cfg.get_uint("batch.p", 4);
  tc.batch.images_per_modality = cfg.get_uint("batch.k", 2);
  tc.loss.margin = cfg.get_double("loss.margin", 0.3);
  if (const auto cm = cfg.get_optional_double("loss.cross_margin")) tc.loss.cross_margin = *cm;
  tc.loss.identity_weight = cfg.get_double("loss.identity_weight", 1.0);
  tc.adam.learning_rate = cfg.get_double("adam.lr", 3e-4);
  tc.adam.beta1 = cfg.get_double("adam.beta1", 0.9);
  tc.adam.beta2 = cfg.get_double("adam.beta2", 0.999);
  tc.adam.epsilon = cfg.get_double("adam.epsilon", 1e-8);
  tc.iterations = cfg.get_uint("train.iterations", 2000);
  tc.kind = loss_kind_from_string(cfg.get_string("loss.kind", "hpi"));
  tc.seed = Rng::derive(root, "train");
  return tc;
}

std::size_t parse_shot(const std::string& s) {
  if (s == "single") return 1;
  if (s == "multi") return 10;
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value == 0) {
    throw input_error("bad shot '" + s + "' (expected single|multi|positive integer)");
  }
  return value;
}

std::vector<std::pair<std::uint8_t, std::uint8_t>> parse_exclusions(
    const std::vector<std::string>& items) {
  std::vector<std::pair<std::uint8_t, std::uint8_t>> pairs;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    unsigned probe = 0;
    unsigned gallery = 0;
    bool ok = colon != std::string::npos;
    if (ok) {
      const auto r1 = std::from_chars(item.data(), item.data() + colon, probe);
      const auto r2 =
          std::from_chars(item.data() + colon + 1, item.data() + item.size(), gallery);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + colon && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size() && probe <= 255 && gallery <= 255;
    }
    if (!ok) {
      throw input_error("bad exclusion '" + item + "' (expected probe_cam:gallery_cam)");
    }
    pairs.emplace_back(static_cast<std::uint8_t>(probe), static_cast<std::uint8_t>(gallery));
  }
  return pairs;
}

ProtocolConfig protocol_from(const Config& cfg, std::uint64_t root) {
  ProtocolConfig protocol;
  protocol.mode = eval_mode_from_string(cfg.get_string("eval.mode", "all"));
  protocol.shot = parse_shot(cfg.get_string("eval.shot", "single"));
  protocol.trials = cfg.get_uint("eval.trials", 10);
  protocol.max_rank = cfg.get_uint("eval.max_rank", 50);
  if (cfg.has("eval.exclusions")) {
    protocol.exclusions = parse_exclusions(cfg.get_list("eval.exclusions", {}));
  }
  protocol.seed = Rng::derive(root, "eval");
  return protocol;
}

// ---- small writers ------------------------------------------------------

void write_history_csv(const fs::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << "iteration,loss,hp,id\n";
  for (const auto& row : history) {
    out << row.iteration << "," << fmt(row.loss) << "," << fmt(row.pentaplet) << ","
        << fmt(row.identity) << "\n";
  }
}

nlohmann::ordered_json report_json(const EvalReport& report, const ProtocolConfig& protocol) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(protocol.mode);
  j["shot"] = protocol.shot;
  j["trials"] = protocol.trials;
  j["cmc"] = report.cmc;
  j["rank1"] = report.rank1;
  j["rank10"] = report.rank10;
  j["rank20"] = report.rank20;
  j["map"] = report.map;
  j["per_trial"] = nlohmann::ordered_json::array();
  for (const auto& t : report.per_trial) {
    nlohmann::ordered_json row;
    row["rank1"] = t.rank1;
    row["rank10"] = t.rank10;
    row["rank20"] = t.rank20;
    row["map"] = t.map;
    row["probes"] = t.probes;
    row["skipped"] = t.skipped;
    row["gallery_size"] = t.gallery_size;
    j["per_trial"].push_back(row);
  }
  j["skipped_probes"] = report.skipped_probes;
  return j;
}

void write_report(const fs::path& path, const EvalReport& report,
                  const ProtocolConfig& protocol) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << report_json(report, protocol).dump(2) << "\n";
}

void write_cmc_csv(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out << "rank,rate\n";
  for (std::size_t k = 0; k < report.cmc.size(); ++k) {
    out << (k + 1) << "," << fmt(report.cmc[k]) << "\n";
  }
}

class ManifestBuilder {
 public:
  ManifestBuilder(const std::string& command, const Config& cfg, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.tool_version = kVersion;
    manifest_.command = command;
    manifest_.config = cfg.entries();
    manifest_.seed = seed;
  }

  void input(const std::string& name, const fs::path& path) {
    manifest_.input_digests[name] = file_digest(path);
  }
  void output(const std::string& name, const fs::path& path) {
    manifest_.output_digests[name] = file_digest(path);
  }

  void write(const fs::path& path) {
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(path, manifest_);
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

// ---- holdout split ------------------------------------------------------

struct Split {
  EmbeddingDataset train;
  EmbeddingDataset holdout;  // empty when fraction == 0
};

// Per (identity, modality) group: a seeded shuffle, then floor(fraction*n)
// records go to the holdout. Original record order is preserved on both sides.
Split split_holdout(const EmbeddingDataset& dataset, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw input_error("train.holdout_fraction must be in [0, 1)");
  }
  Split split;
  split.train.dim = dataset.dim;
  split.holdout.dim = dataset.dim;
  if (fraction == 0.0) {
    split.train.records = dataset.records;
    return split;
  }
  std::map<std::pair<std::uint32_t, Modality>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    groups[{dataset.records[i].identity, dataset.records[i].modality}].push_back(i);
  }
  Rng rng(seed);
  std::vector<char> held(dataset.size(), 0);
  for (auto& [key, members] : groups) {
    const std::size_t take = static_cast<std::size_t>(fraction * members.size());
    rng.shuffle(members);
    for (std::size_t i = 0; i < take; ++i) held[members[i]] = 1;
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (held[i] ? split.holdout : split.train).records.push_back(dataset.records[i]);
  }
  return split;
}

// ---- subcommands --------------------------------------------------------

struct SynthArgs {
  std::string spec_file;
  std::string out;
};

int cmd_synth(const GlobalOpts& g, const SynthArgs& args) {
  const std::string cfg_path = args.spec_file.empty() ? g.config_path : args.spec_file;
  const Config cfg = load_config(cfg_path);
  const std::uint64_t root = resolve_seed(g, cfg);
  ManifestBuilder manifest("synth", cfg, root);

  log_stage(g, "synth");
  const EmbeddingDataset dataset = generate_synthetic(synth_spec_from(cfg, root));
  const fs::path out = out_path(g, args.out);
  write_dataset(out, dataset);

  manifest.output("data", out);
  manifest.write(out.string() + ".manifest.json");
  std::cout << "wrote " << out.string() << " (" << dataset.size() << " records, dim "
            << dataset.dim << ")\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out_model;
  std::string out_history;
  std::string loss;
};

int cmd_train(const GlobalOpts& g, const TrainArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);
  ManifestBuilder manifest("train", cfg, root);

  const EmbeddingDataset dataset = read_dataset(args.data);
  TrainConfig tc = train_config_from(cfg, root);
  if (!args.loss.empty()) tc.kind = loss_kind_from_string(args.loss);

  const std::size_t hidden = cfg.get_uint("train.hidden_dim", 16);
  const std::size_t out_dim = cfg.get_uint("train.output_dim", 2);
  Rng init_rng(Rng::derive(root, "init"));
  Trainable trainable;
  trainable.model = EmbeddingModel::create(dataset.dim, hidden, out_dim, init_rng);
  trainable.head = make_head(dataset, out_dim, init_rng);

  log_stage(g, "train");
  const TrainResult result = train(dataset, std::move(trainable), tc);

  const fs::path model_path = out_path(g, args.out_model);
  const fs::path history_path = out_path(g, args.out_history);
  write_model(model_path, result.trained.model);
  write_history_csv(history_path, result.history);

  manifest.input("data", args.data);
  manifest.output("model", model_path);
  manifest.output("history", history_path);
  manifest.write(model_path.string() + ".manifest.json");
  std::cout << "trained " << to_string(tc.kind) << " for " << tc.iterations << " iterations";
  if (!result.history.empty()) std::cout << ", final loss " << fmt(result.history.back().loss);
  std::cout << "\n";
  return 0;
}

struct ExportArgs {
  std::string model;
  std::string data;
  std::string out;
};

int cmd_export(const GlobalOpts& g, const ExportArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);
  ManifestBuilder manifest("export", cfg, root);

  log_stage(g, "export");
  const EmbeddingModel model = read_model(args.model);
  const EmbeddingDataset dataset = read_dataset(args.data);
  const EmbeddingDataset embedded = export_embeddings(model, dataset);
  const fs::path out = out_path(g, args.out);
  write_dataset(out, embedded);

  manifest.input("model", args.model);
  manifest.input("data", args.data);
  manifest.output("embeddings", out);
  manifest.write(out.string() + ".manifest.json");
  std::cout << "wrote " << out.string() << " (" << embedded.size() << " records, dim "
            << embedded.dim << ")\n";
  return 0;
}

struct MineArgs {
  std::string batch_file;
  std::string report;
};

int cmd_mine(const GlobalOpts& g, const MineArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);
  ManifestBuilder manifest("mine", cfg, root);

  log_stage(g, "mine");
  const EmbeddingDataset dataset = read_dataset(args.batch_file);
  const CmBatch batch = infer_layout(dataset);
  const DistanceMatrix dmat = pairwise_distances(dataset_matrix(dataset));
  const auto pentaplets = mine_batch(batch, dmat);

  const fs::path report = out_path(g, args.report);
  std::ofstream out(report);
  if (!out) throw data_error("cannot write '" + report.string() + "'");
  out << "anchor,global_pos,global_neg,cross_pos,cross_neg,"
         "d_global_pos,d_global_neg,d_cross_pos,d_cross_neg\n";
  for (const auto& p : pentaplets) {
    out << p.anchor << "," << p.global_pos << "," << p.global_neg << "," << p.cross_pos << ","
        << p.cross_neg << "," << fmt(p.d_global_pos) << "," << fmt(p.d_global_neg) << ","
        << fmt(p.d_cross_pos) << "," << fmt(p.d_cross_neg) << "\n";
  }
  out.close();

  manifest.input("batch", args.batch_file);
  manifest.output("report", report);
  manifest.write(report.string() + ".manifest.json");
  std::cout << "mined " << pentaplets.size() << " pentaplets (P=" << batch.spec.num_identities
            << ", K=" << batch.spec.images_per_modality << ")\n";
  return 0;
}

struct GradcheckArgs {
  std::string loss = "hp";
  std::size_t instances = 20;
  double tolerance = -1.0;  // <0: per-target default
  std::string out;
};

int cmd_gradcheck(const GlobalOpts& g, const GradcheckArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);

  const GradTarget target = grad_target_from_string(args.loss);
  const double tolerance =
      args.tolerance >= 0.0 ? args.tolerance : grad_target_tolerance(target);
  log_stage(g, "gradcheck");
  const GradCheckResult result = run_gradcheck(target, args.instances, root);
  const bool pass = result.max_rel_error <= tolerance;

  std::cout << "target=" << to_string(target) << " instances=" << result.instances
            << " coordinates=" << result.coordinates
            << " max_rel_error=" << fmt(result.max_rel_error) << " tolerance=" << fmt(tolerance)
            << " status=" << (pass ? "pass" : "fail") << "\n";

  if (!args.out.empty()) {
    const fs::path out = out_path(g, args.out);
    nlohmann::ordered_json j;
    j["target"] = to_string(target);
    j["instances"] = result.instances;
    j["coordinates"] = result.coordinates;
    j["max_rel_error"] = result.max_rel_error;
    j["tolerance"] = tolerance;
    j["pass"] = pass;
    std::ofstream os(out);
    if (!os) throw data_error("cannot write '" + out.string() + "'");
    os << j.dump(2) << "\n";
    os.close();
    ManifestBuilder manifest("gradcheck", cfg, root);
    manifest.output("result", out);
    manifest.write(out.string() + ".manifest.json");
  }
  if (!pass) {
    std::cerr << "gradcheck: max relative error " << fmt(result.max_rel_error)
              << " exceeds tolerance " << fmt(tolerance) << "\n";
    return 3;
  }
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string mode;
  std::string shot;
  std::size_t trials = 0;  // 0: from config/default
  std::string out;
  std::string cmc_csv;
};

int cmd_eval(const GlobalOpts& g, const EvalArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);
  ManifestBuilder manifest("eval", cfg, root);

  ProtocolConfig protocol = protocol_from(cfg, root);
  if (!args.mode.empty()) protocol.mode = eval_mode_from_string(args.mode);
  if (!args.shot.empty()) protocol.shot = parse_shot(args.shot);
  if (args.trials > 0) protocol.trials = args.trials;

  log_stage(g, "eval");
  const EmbeddingDataset dataset = read_dataset(args.data);
  const EvalReport report = evaluate(dataset, protocol);

  const fs::path out = out_path(g, args.out);
  write_report(out, report, protocol);
  manifest.input("data", args.data);
  manifest.output("report", out);
  if (!args.cmc_csv.empty()) {
    const fs::path cmc = out_path(g, args.cmc_csv);
    write_cmc_csv(cmc, report);
    manifest.output("cmc", cmc);
  }
  manifest.write(out.string() + ".manifest.json");
  std::cout << "rank1=" << fmt(report.rank1) << " rank10=" << fmt(report.rank10)
            << " rank20=" << fmt(report.rank20) << " map=" << fmt(report.map) << "\n";
  return 0;
}

// ---- pipeline -----------------------------------------------------------

struct PipelineArgs {
  std::string loss;
  std::vector<std::string> margin_sweep;
};

struct StageFailure {
  std::string stage;
};

template <typename F>
auto run_stage(const GlobalOpts& g, const std::string& command, const std::string& stage, F&& f) {
  log_stage(g, command + " stage " + stage);
  try {
    return f();
  } catch (const std::exception&) {
    std::cerr << command << ": stage '" << stage << "' failed" << std::endl;
    throw;
  }
}

struct PipelineOutcome {
  EvalReport report;
};

// synth -> sample -> train -> export -> eval, all artifacts under `dir`.
PipelineOutcome run_pipeline_once(const GlobalOpts& g, const Config& cfg, std::uint64_t root,
                                  const fs::path& dir, const std::string& loss_override) {
  fs::create_directories(dir);
  ManifestBuilder manifest("pipeline", cfg, root);

  const EmbeddingDataset dataset = run_stage(g, "pipeline", "synth", [&] {
    const EmbeddingDataset d = generate_synthetic(synth_spec_from(cfg, root));
    write_dataset(dir / "dataset.emb", d);
    return d;
  });

  TrainConfig tc = train_config_from(cfg, root);
  if (!loss_override.empty()) tc.kind = loss_kind_from_string(loss_override);
  const double holdout_fraction = cfg.get_double("train.holdout_fraction", 0.25);

  const Split split = run_stage(g, "pipeline", "sample", [&] {
    tc.batch.validate();
    Split s = split_holdout(dataset, holdout_fraction, Rng::derive(root, "holdout"));
    const auto eligible = eligible_identities(s.train, tc.batch.images_per_modality);
    if (eligible.size() < tc.batch.num_identities) {
      throw data_error("training split has " + std::to_string(eligible.size()) +
                       " eligible identities, need " +
                       std::to_string(tc.batch.num_identities));
    }
    return s;
  });

  const TrainResult result = run_stage(g, "pipeline", "train", [&] {
    const std::size_t hidden = cfg.get_uint("train.hidden_dim", 16);
    const std::size_t out_dim = cfg.get_uint("train.output_dim", 2);
    Rng init_rng(Rng::derive(root, "init"));
    Trainable trainable;
    trainable.model = EmbeddingModel::create(dataset.dim, hidden, out_dim, init_rng);
    trainable.head = make_head(split.train, out_dim, init_rng);
    TrainResult r = train(split.train, std::move(trainable), tc);
    write_model(dir / "model.hmd", r.trained.model);
    write_history_csv(dir / "history.csv", r.history);
    return r;
  });

  const EmbeddingDataset eval_set = run_stage(g, "pipeline", "export", [&] {
    const EmbeddingDataset full = export_embeddings(result.trained.model, dataset);
    write_dataset(dir / "embeddings.emb", full);
    const EmbeddingDataset& held = split.holdout.records.empty() ? dataset : split.holdout;
    return export_embeddings(result.trained.model, held);
  });

  PipelineOutcome outcome;
  const ProtocolConfig protocol = protocol_from(cfg, root);
  run_stage(g, "pipeline", "eval", [&] {
    outcome.report = evaluate(eval_set, protocol);
    write_report(dir / "report.json", outcome.report, protocol);
    write_cmc_csv(dir / "cmc.csv", outcome.report);
    return 0;
  });

  manifest.output("dataset", dir / "dataset.emb");
  manifest.output("model", dir / "model.hmd");
  manifest.output("history", dir / "history.csv");
  manifest.output("embeddings", dir / "embeddings.emb");
  manifest.output("report", dir / "report.json");
  manifest.output("cmc", dir / "cmc.csv");
  manifest.write(dir / "manifest.json");
  return outcome;
}

int cmd_pipeline(const GlobalOpts& g, const PipelineArgs& args) {
  const Config base = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, base);
  const fs::path dir(g.out_dir);

  if (args.margin_sweep.empty()) {
    const PipelineOutcome outcome = run_pipeline_once(g, base, root, dir, args.loss);
    std::cout << "rank1=" << fmt(outcome.report.rank1) << " map=" << fmt(outcome.report.map)
              << "\n";
    return 0;
  }

  // Margin sweep: one full pipeline per margin under margin_<m>/, same root
  // seed so data, split, and init match across margins.
  fs::create_directories(dir);
  std::ofstream sweep(dir / "margin_sweep.csv");
  if (!sweep) throw data_error("cannot write margin_sweep.csv");
  sweep << "margin,rank1,rank10,rank20,map\n";
  for (const auto& margin_text : args.margin_sweep) {
    Config cfg = base;
    cfg.set("loss.margin", margin_text);
    if (!cfg.get_optional_double("loss.margin")) {
      throw input_error("bad margin '" + margin_text + "'");  // unreachable; parse throws
    }
    const PipelineOutcome outcome =
        run_pipeline_once(g, cfg, root, dir / ("margin_" + margin_text), args.loss);
    sweep << margin_text << "," << fmt(outcome.report.rank1) << ","
          << fmt(outcome.report.rank10) << "," << fmt(outcome.report.rank20) << ","
          << fmt(outcome.report.map) << "\n";
    std::cout << "margin=" << margin_text << " rank1=" << fmt(outcome.report.rank1)
              << " map=" << fmt(outcome.report.map) << "\n";
  }
  return 0;
}

// ---- compare-losses -----------------------------------------------------

struct CompareArgs {
  std::vector<std::string> losses;
};

int cmd_compare_losses(const GlobalOpts& g, const CompareArgs& args) {
  const Config cfg = load_config(g.config_path);
  const std::uint64_t root = resolve_seed(g, cfg);

  std::vector<std::string> losses = args.losses;
  if (losses.empty()) losses = cfg.get_list("compare.losses", {"id", "ht", "hti", "hp", "hpi"});
  if (losses.size() < 2) throw input_error("compare-losses needs at least 2 losses");
  std::vector<LossKind> kinds;
  for (const auto& name : losses) kinds.push_back(loss_kind_from_string(name));

  const fs::path dir(g.out_dir);
  fs::create_directories(dir);
  ManifestBuilder manifest("compare-losses", cfg, root);

  // Shared data, split, protocol, and init seed: the loss is the only
  // difference between runs.
  const EmbeddingDataset dataset = run_stage(g, "compare-losses", "synth", [&] {
    return generate_synthetic(synth_spec_from(cfg, root));
  });
  const double holdout_fraction = cfg.get_double("train.holdout_fraction", 0.25);
  const Split split = split_holdout(dataset, holdout_fraction, Rng::derive(root, "holdout"));
  const ProtocolConfig protocol = protocol_from(cfg, root);
  const std::size_t hidden = cfg.get_uint("train.hidden_dim", 16);
  const std::size_t out_dim = cfg.get_uint("train.output_dim", 2);

  std::ofstream table(dir / "comparison.csv");
  if (!table) throw data_error("cannot write comparison.csv");
  table << "loss,rank1,rank10,rank20,map\n";

  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::string& name = losses[i];
    const EvalReport report = run_stage(g, "compare-losses", name, [&] {
      TrainConfig tc = train_config_from(cfg, root);
      tc.kind = kinds[i];
      Rng init_rng(Rng::derive(root, "init"));
      Trainable trainable;
      trainable.model = EmbeddingModel::create(dataset.dim, hidden, out_dim, init_rng);
      trainable.head = make_head(split.train, out_dim, init_rng);
      const TrainResult result = train(split.train, std::move(trainable), tc);
      const EmbeddingDataset& held = split.holdout.records.empty() ? dataset : split.holdout;
      return evaluate(export_embeddings(result.trained.model, held), protocol);
    });
    table << name << "," << fmt(report.rank1) << "," << fmt(report.rank10) << ","
          << fmt(report.rank20) << "," << fmt(report.map) << "\n";
    write_cmc_csv(dir / ("cmc_" + name + ".csv"), report);
    std::cout << name << ": rank1=" << fmt(report.rank1) << " map=" << fmt(report.map) << "\n";
  }
  table.close();

  manifest.output("comparison", dir / "comparison.csv");
  for (const auto& name : losses) {
    manifest.output("cmc_" + name, dir / ("cmc_" + name + ".csv"));
  }
  manifest.write(dir / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpiln: cross-modality metric learning on embedding vectors"};
  app.require_subcommand(1);

  GlobalOpts g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Root seed (overrides config 'seed')");
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--out-dir", g.out_dir, "Directory output paths resolve against");
  app.add_flag("--verbose", g.verbose, "Stage progress on stderr");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cross-modality dataset");
  synth->add_option("--spec-file", synth_args.spec_file, "Config file with synth.* keys");
  synth->add_option("--out", synth_args.out, "Output dataset (.emb or .csv)")->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train an embedding model");
  train_cmd->add_option("--data", train_args.data, "Input dataset")->required();
  train_cmd->add_option("--out-model", train_args.out_model, "Model output path")->required();
  train_cmd->add_option("--out-history", train_args.out_history, "Loss history CSV")->required();
  train_cmd->add_option("--loss", train_args.loss, "Objective: id|ht|hti|hp|hpi");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export", "Run a dataset through a trained model");
  export_cmd->add_option("--model", export_args.model, "Model file")->required();
  export_cmd->add_option("--data", export_args.data, "Input dataset")->required();
  export_cmd->add_option("--out", export_args.out, "Output dataset")->required();

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "Dump hardest pentaplets of a cm-batch file");
  mine->add_option("--batch-file", mine_args.batch_file, "Dataset in cm-batch order")
      ->required();
  mine->add_option("--report", mine_args.report, "Pentaplet CSV output")->required();

  GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  gradcheck->add_option("--loss", grad_args.loss, "trip|htrip|hgt|hct|hp|id|hpi|model");
  gradcheck->add_option("--instances", grad_args.instances, "Random instances to check");
  gradcheck->add_option("--tolerance", grad_args.tolerance, "Max relative error accepted");
  gradcheck->add_option("--out", grad_args.out, "Optional JSON result path");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-modality ranking evaluation");
  eval_cmd->add_option("--data", eval_args.data, "Embeddings dataset")->required();
  eval_cmd->add_option("--mode", eval_args.mode, "all|indoor");
  eval_cmd->add_option("--shot", eval_args.shot, "single|multi|N");
  eval_cmd->add_option("--trials", eval_args.trials, "Random gallery draws");
  eval_cmd->add_option("--out", eval_args.out, "Report JSON path")->required();
  eval_cmd->add_option("--cmc-csv", eval_args.cmc_csv, "Optional CMC curve CSV");

  PipelineArgs pipeline_args;
  auto* pipeline = app.add_subcommand("pipeline", "synth -> train -> export -> eval");
  pipeline->add_option("--loss", pipeline_args.loss, "Objective override");
  pipeline->add_option("--margin-sweep", pipeline_args.margin_sweep,
                       "Comma-separated margins; one pipeline per margin")
      ->delimiter(',');

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare-losses", "Train once per loss, one table");
  compare->add_option("--losses", compare_args.losses, "Comma-separated subset of id,ht,hti,hp,hpi")
      ->delimiter(',');

  for (auto* sub : {synth, train_cmd, export_cmd, mine, gradcheck, eval_cmd, pipeline, compare}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*synth) return cmd_synth(g, synth_args);
    if (*train_cmd) return cmd_train(g, train_args);
    if (*export_cmd) return cmd_export(g, export_args);
    if (*mine) return cmd_mine(g, mine_args);
    if (*gradcheck) return cmd_gradcheck(g, grad_args);
    if (*eval_cmd) return cmd_eval(g, eval_args);
    if (*pipeline) return cmd_pipeline(g, pipeline_args);
    if (*compare) return cmd_compare_losses(g, compare_args);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
