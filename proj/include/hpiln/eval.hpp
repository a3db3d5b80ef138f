#ifndef HPILN_EVAL_HPP_
#define HPILN_EVAL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/rng.hpp"

namespace hpiln {

enum class EvalMode { AllSearch, IndoorSearch };

EvalMode eval_mode_from_string(const std::string& s);
std::string to_string(EvalMode mode);

// Cross-modality ranking protocol. Gallery draws RGB records per identity per
// gallery camera; the probe set is every IR record from the probe cameras.
struct ProtocolConfig {
  EvalMode mode = EvalMode::AllSearch;
  std::size_t shot = 1;      // images per identity per gallery camera (1/10)
  std::size_t trials = 10;   // random gallery draws averaged in the report
  std::uint64_t seed = 0;
  // (probe_cam, gallery_cam) pairs never ranked against each other.
  std::vector<std::pair<std::uint8_t, std::uint8_t>> exclusions{{3, 2}};
  std::size_t max_rank = 50;

  std::vector<std::uint8_t> gallery_cameras() const;  // AllSearch {1,2,4,5}, Indoor {1,2}
  std::vector<std::uint8_t> probe_cameras() const;    // AllSearch {3,6}, Indoor {3}
  void validate() const;
};

struct GalleryProbe {
  std::vector<std::size_t> gallery;  // dataset indices
  std::vector<std::size_t> probe;
};

// One random gallery draw plus the full probe set. Deterministic in rng
// state. Throws data_error when either side comes out empty.
GalleryProbe build_gallery_probe(const EmbeddingDataset& dataset, const ProtocolConfig& protocol,
                                 Rng& rng);

// Ranked gallery for one probe: camera exclusions applied, remaining items
// sorted by ascending distance, ties to the lowest gallery position.
struct GalleryItem {
  std::uint32_t identity = 0;
  std::uint8_t camera = 1;
};

struct RankingResult {
  std::size_t probe_index = 0;
  std::vector<std::size_t> order;  // gallery positions, best match first
  std::vector<char> relevant;      // per rank: shares the probe identity
};

RankingResult rank_probe(std::uint32_t probe_identity, std::uint8_t probe_camera,
                         std::span<const GalleryItem> gallery, std::span<const double> distances,
                         std::span<const std::pair<std::uint8_t, std::uint8_t>> exclusions);

// Standard retrieval AP: mean over relevant ranks k of (#relevant in top k)/k.
// Throws input_error when the ranking holds no relevant item.
double average_precision(const RankingResult& result);

struct TrialStats {
  double rank1 = 0.0;
  double rank10 = 0.0;
  double rank20 = 0.0;
  double map = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;        // probes with zero eligible relevant items
  std::size_t gallery_size = 0;
};

struct EvalReport {
  std::vector<double> cmc;  // ranks 1..R averaged over trials
  double rank1 = 0.0;
  double rank10 = 0.0;
  double rank20 = 0.0;
  double map = 0.0;
  std::vector<TrialStats> per_trial;
  std::size_t skipped_probes = 0;  // total across trials
};

// Full protocol: per trial build gallery/probe, rank every probe, accumulate
// CMC (hit at rank k = any relevant at rank <= k) and AP, then average across
// probes and trials.
EvalReport evaluate(const EmbeddingDataset& dataset, const ProtocolConfig& protocol);

}  // namespace hpiln

#endif  // HPILN_EVAL_HPP_
