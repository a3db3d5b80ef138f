#ifndef HPILN_SAMPLER_HPP_
#define HPILN_SAMPLER_HPP_

#include <cstdint>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/rng.hpp"

namespace hpiln {

// Cross-modality batch shape: P identities, each contributing K RGB and
// K IR samples, batch size 2*P*K.
struct CmBatchSpec {
  std::size_t num_identities = 8;      // P
  std::size_t images_per_modality = 4; // K
  std::uint64_t seed = 0;

  std::size_t batch_size() const { return 2 * num_identities * images_per_modality; }
  void validate() const;  // P >= 2, K >= 1
};

// A sampled batch: indices into the dataset laid out as P contiguous person
// blocks, each block = K RGB indices followed by K IR indices.
struct CmBatch {
  CmBatchSpec spec;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  std::size_t block_size() const { return 2 * spec.images_per_modality; }
  std::size_t block_of(std::size_t pos) const { return pos / block_size(); }
  // First K slots of a block are RGB, the next K are IR.
  bool is_rgb_slot(std::size_t pos) const {
    return pos % block_size() < spec.images_per_modality;
  }
};

// Batch with indices 0..2PK-1, for operating on embeddings that are already
// in cm-batch order (loss evaluation on a standalone matrix, audit tools).
CmBatch make_layout_batch(std::size_t num_identities, std::size_t images_per_modality);

// Checks that `dataset` record order forms a valid cm-batch layout (blocks of
// one identity, K RGB then K IR each) and recovers P and K from it.
CmBatch infer_layout(const EmbeddingDataset& dataset);

// Identity labels possessing at least one RGB and one IR record, sorted
// ascending. K is part of the contract but does not narrow the result:
// identities short of K samples in a modality are later sampled with
// replacement instead of being excluded.
std::vector<std::uint32_t> eligible_identities(const EmbeddingDataset& dataset,
                                               std::size_t images_per_modality);

// Draws a cm-batch: P identities uniformly without replacement, then per
// identity and modality K records (without replacement when enough exist,
// with replacement otherwise). Throws data_error when fewer than P
// identities are eligible.
CmBatch sample_cm_batch(const EmbeddingDataset& dataset, const CmBatchSpec& spec, Rng& rng);

}  // namespace hpiln

#endif  // HPILN_SAMPLER_HPP_
