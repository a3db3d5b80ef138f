#include "hpiln/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "hpiln/distance.hpp"

namespace hpiln {

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "all" || s == "all-search") return EvalMode::AllSearch;
  if (s == "indoor" || s == "indoor-search") return EvalMode::IndoorSearch;
  throw input_error("unknown eval mode '" + s + "' (expected all|indoor)");
}

std::string to_string(EvalMode mode) {
  return mode == EvalMode::AllSearch ? "all" : "indoor";
}

std::vector<std::uint8_t> ProtocolConfig::gallery_cameras() const {
  if (mode == EvalMode::AllSearch) return {1, 2, 4, 5};
  return {1, 2};
}

std::vector<std::uint8_t> ProtocolConfig::probe_cameras() const {
  if (mode == EvalMode::AllSearch) return {3, 6};
  return {3};
}

void ProtocolConfig::validate() const {
  if (shot < 1) throw input_error("shot must be >= 1");
  if (trials < 1) throw input_error("trials must be >= 1");
  if (max_rank < 1) throw input_error("max_rank must be >= 1");
}

GalleryProbe build_gallery_probe(const EmbeddingDataset& dataset, const ProtocolConfig& protocol,
                                 Rng& rng) {
  protocol.validate();
  const auto gallery_cams = protocol.gallery_cameras();
  const auto probe_cams = protocol.probe_cameras();
  const auto in = [](const std::vector<std::uint8_t>& cams, std::uint8_t c) {
    return std::find(cams.begin(), cams.end(), c) != cams.end();
  };

  // Gallery pools keyed by (identity, camera); ordered so the rng consumption
  // sequence is independent of dataset record order.
  std::map<std::pair<std::uint32_t, std::uint8_t>, std::vector<std::size_t>> pools;
  GalleryProbe out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset.records[i];
    if (rec.modality == Modality::Rgb && in(gallery_cams, rec.camera)) {
      pools[{rec.identity, rec.camera}].push_back(i);
    } else if (rec.modality == Modality::Ir && in(probe_cams, rec.camera)) {
      out.probe.push_back(i);
    }
  }

  for (const auto& [key, pool] : pools) {
    const std::size_t take = std::min(protocol.shot, pool.size());
    auto picks = rng.sample_without_replacement(pool.size(), take);
    std::sort(picks.begin(), picks.end());
    for (const std::size_t p : picks) out.gallery.push_back(pool[p]);
  }

  if (out.gallery.empty()) throw data_error("gallery is empty under this protocol");
  if (out.probe.empty()) throw data_error("probe set is empty under this protocol");
  return out;
}

RankingResult rank_probe(std::uint32_t probe_identity, std::uint8_t probe_camera,
                         std::span<const GalleryItem> gallery, std::span<const double> distances,
                         std::span<const std::pair<std::uint8_t, std::uint8_t>> exclusions) {
  if (gallery.size() != distances.size()) {
    throw input_error("gallery/distance size mismatch");
  }
  RankingResult result;
  result.order.reserve(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    bool excluded = false;
    for (const auto& [pc, gc] : exclusions) {
      if (pc == probe_camera && gc == gallery[g].camera) {
        excluded = true;
        break;
      }
    }
    if (!excluded) result.order.push_back(g);
  }
  std::sort(result.order.begin(), result.order.end(), [&](std::size_t a, std::size_t b) {
    if (distances[a] != distances[b]) return distances[a] < distances[b];
    return a < b;
  });
  result.relevant.reserve(result.order.size());
  for (const std::size_t g : result.order) {
    result.relevant.push_back(gallery[g].identity == probe_identity ? 1 : 0);
  }
  return result;
}

double average_precision(const RankingResult& result) {
  std::size_t total_relevant = 0;
  for (const char r : result.relevant) total_relevant += static_cast<std::size_t>(r);
  if (total_relevant == 0) throw input_error("ranking has no relevant item");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < result.relevant.size(); ++k) {
    if (result.relevant[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

EvalReport evaluate(const EmbeddingDataset& dataset, const ProtocolConfig& protocol) {
  dataset.validate();
  protocol.validate();

  const Matrix all = dataset_matrix(dataset);
  EvalReport report;
  std::size_t rank_count = 0;  // R of the first trial; trials must agree
  std::vector<double> cmc_sum;

  for (std::size_t t = 0; t < protocol.trials; ++t) {
    Rng rng(Rng::derive(protocol.seed, "trial" + std::to_string(t)));
    const GalleryProbe gp = build_gallery_probe(dataset, protocol, rng);

    std::vector<GalleryItem> gallery(gp.gallery.size());
    Matrix gallery_vecs(gp.gallery.size(), dataset.dim);
    for (std::size_t g = 0; g < gp.gallery.size(); ++g) {
      const auto& rec = dataset.records[gp.gallery[g]];
      gallery[g] = {rec.identity, rec.camera};
      std::copy(rec.vec.begin(), rec.vec.end(), gallery_vecs.row(g).begin());
    }
    Matrix probe_vecs(gp.probe.size(), dataset.dim);
    for (std::size_t p = 0; p < gp.probe.size(); ++p) {
      const auto& rec = dataset.records[gp.probe[p]];
      std::copy(rec.vec.begin(), rec.vec.end(), probe_vecs.row(p).begin());
    }
    const Matrix dist = cross_distances(probe_vecs, gallery_vecs);

    const std::size_t r_count = std::min(protocol.max_rank, gallery.size());
    if (t == 0) {
      rank_count = r_count;
      cmc_sum.assign(rank_count, 0.0);
    } else if (r_count != rank_count) {
      throw data_error("gallery size changed across trials");
    }

    std::vector<double> cmc_hits(rank_count, 0.0);
    double ap_sum = 0.0;
    std::size_t counted = 0;
    std::size_t skipped = 0;

    for (std::size_t p = 0; p < gp.probe.size(); ++p) {
      const auto& rec = dataset.records[gp.probe[p]];
      auto ranking = rank_probe(rec.identity, rec.camera, gallery, dist.row(p),
                                protocol.exclusions);
      ranking.probe_index = gp.probe[p];

      std::size_t first_relevant = ranking.relevant.size();
      for (std::size_t k = 0; k < ranking.relevant.size(); ++k) {
        if (ranking.relevant[k]) {
          first_relevant = k;
          break;
        }
      }
      if (first_relevant == ranking.relevant.size()) {
        ++skipped;  // nothing to retrieve for this probe under the exclusions
        continue;
      }
      ++counted;
      for (std::size_t k = first_relevant; k < rank_count; ++k) cmc_hits[k] += 1.0;
      ap_sum += average_precision(ranking);
    }

    if (counted == 0) throw data_error("no probe had a relevant gallery item");

    TrialStats stats;
    stats.probes = counted;
    stats.skipped = skipped;
    stats.gallery_size = gallery.size();
    const double denom = static_cast<double>(counted);
    const auto cmc_at = [&](std::size_t k) {
      return cmc_hits[std::min(k, rank_count) - 1] / denom;
    };
    stats.rank1 = cmc_at(1);
    stats.rank10 = cmc_at(10);
    stats.rank20 = cmc_at(20);
    stats.map = ap_sum / denom;
    for (std::size_t k = 0; k < rank_count; ++k) cmc_sum[k] += cmc_hits[k] / denom;

    report.per_trial.push_back(stats);
    report.skipped_probes += skipped;
  }

  const double trials = static_cast<double>(protocol.trials);
  report.cmc.resize(rank_count);
  for (std::size_t k = 0; k < rank_count; ++k) report.cmc[k] = cmc_sum[k] / trials;
  for (const auto& stats : report.per_trial) {
    report.rank1 += stats.rank1 / trials;
    report.rank10 += stats.rank10 / trials;
    report.rank20 += stats.rank20 / trials;
    report.map += stats.map / trials;
  }
  return report;
}

}  // namespace hpiln
