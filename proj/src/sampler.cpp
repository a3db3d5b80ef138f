#include "hpiln/sampler.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>

namespace hpiln {

void CmBatchSpec::validate() const {
  if (num_identities < 2) throw input_error("P must be >= 2 (a negative identity must exist)");
  if (images_per_modality < 1) throw input_error("K must be >= 1");
}

CmBatch make_layout_batch(std::size_t num_identities, std::size_t images_per_modality) {
  CmBatchSpec spec;
  spec.num_identities = num_identities;
  spec.images_per_modality = images_per_modality;
  spec.validate();
  CmBatch batch;
  batch.spec = spec;
  batch.indices.resize(spec.batch_size());
  for (std::size_t i = 0; i < batch.indices.size(); ++i) batch.indices[i] = i;
  return batch;
}

CmBatch infer_layout(const EmbeddingDataset& dataset) {
  dataset.validate();
  const auto& recs = dataset.records;
  // K = length of the leading RGB run.
  std::size_t k = 0;
  while (k < recs.size() && recs[k].modality == Modality::Rgb) ++k;
  if (k == 0 || k == recs.size()) throw data_error("not a cm-batch: no leading RGB/IR split");
  const std::size_t block = 2 * k;
  if (recs.size() % block != 0) {
    throw data_error("not a cm-batch: " + std::to_string(recs.size()) +
                     " records do not divide into blocks of " + std::to_string(block));
  }
  const std::size_t p = recs.size() / block;
  if (p < 2) throw data_error("not a cm-batch: needs at least 2 identities");
  for (std::size_t b = 0; b < p; ++b) {
    const std::uint32_t id = recs[b * block].identity;
    for (std::size_t s = 0; s < block; ++s) {
      const auto& r = recs[b * block + s];
      if (r.identity != id) {
        throw data_error("not a cm-batch: identity changes inside block " + std::to_string(b));
      }
      const Modality want = s < k ? Modality::Rgb : Modality::Ir;
      if (r.modality != want) {
        throw data_error("not a cm-batch: modality layout broken in block " + std::to_string(b));
      }
    }
  }
  CmBatch batch = make_layout_batch(p, k);
  return batch;
}

std::vector<std::uint32_t> eligible_identities(const EmbeddingDataset& dataset,
                                               std::size_t images_per_modality) {
  if (images_per_modality < 1) throw input_error("K must be >= 1");
  std::map<std::uint32_t, std::pair<bool, bool>> coverage;  // id -> (has RGB, has IR)
  for (const auto& rec : dataset.records) {
    auto& c = coverage[rec.identity];
    if (rec.modality == Modality::Rgb) {
      c.first = true;
    } else {
      c.second = true;
    }
  }
  std::vector<std::uint32_t> out;
  for (const auto& [id, c] : coverage) {
    if (c.first && c.second) out.push_back(id);
  }
  // std::map iterates ascending already; keep the sort as the contract.
  std::sort(out.begin(), out.end());
  return out;
}

CmBatch sample_cm_batch(const EmbeddingDataset& dataset, const CmBatchSpec& spec, Rng& rng) {
  spec.validate();
  dataset.validate();
  const std::size_t p = spec.num_identities;
  const std::size_t k = spec.images_per_modality;

  const auto eligible = eligible_identities(dataset, k);
  if (eligible.size() < p) {
    throw data_error("need " + std::to_string(p) + " identities with both modalities, found " +
                     std::to_string(eligible.size()));
  }

  // Record indices per (identity, modality), in dataset order.
  std::map<std::uint32_t, std::array<std::vector<std::size_t>, 2>> pools;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rec = dataset.records[i];
    pools[rec.identity][static_cast<std::size_t>(rec.modality)].push_back(i);
  }

  CmBatch batch;
  batch.spec = spec;
  batch.indices.reserve(spec.batch_size());

  const auto chosen = rng.sample_without_replacement(eligible.size(), p);
  for (std::size_t slot = 0; slot < p; ++slot) {
    const std::uint32_t id = eligible[chosen[slot]];
    for (Modality m : {Modality::Rgb, Modality::Ir}) {
      const auto& pool = pools[id][static_cast<std::size_t>(m)];
      if (pool.size() >= k) {
        const auto picks = rng.sample_without_replacement(pool.size(), k);
        for (std::size_t pick : picks) batch.indices.push_back(pool[pick]);
      } else {
        // Short pool: draw with replacement so the batch layout stays rigid.
        for (std::size_t j = 0; j < k; ++j) {
          batch.indices.push_back(pool[rng.uniform_int(pool.size())]);
        }
      }
    }
  }
  return batch;
}

}  // namespace hpiln
