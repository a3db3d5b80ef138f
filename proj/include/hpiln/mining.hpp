#ifndef HPILN_MINING_HPP_
#define HPILN_MINING_HPP_

#include <utility>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/sampler.hpp"

namespace hpiln {

// Per-anchor selection: hardest global positive/negative plus hardest
// cross-modality positive/negative, with the four selected distances.
struct HardestPentaplet {
  std::size_t anchor = 0;
  std::size_t global_pos = 0;
  std::size_t global_neg = 0;
  std::size_t cross_pos = 0;
  std::size_t cross_neg = 0;
  double d_global_pos = 0.0;
  double d_global_neg = 0.0;
  double d_cross_pos = 0.0;
  double d_cross_neg = 0.0;
};

// Hardest global positive (argmax same-identity distance, anchor excluded)
// and hardest global negative (argmin different-identity distance) for one
// anchor, both modalities admitted. Ties go to the lowest batch position.
std::pair<std::size_t, std::size_t> mine_global(const CmBatch& batch,
                                                const DistanceMatrix& dmat,
                                                std::size_t anchor);

// Same selection restricted to the opposite-modality half of every block:
// an RGB anchor mines among IR positions and vice versa.
std::pair<std::size_t, std::size_t> mine_cross(const CmBatch& batch,
                                               const DistanceMatrix& dmat,
                                               std::size_t anchor);

// One pentaplet per batch position as anchor, in position order.
std::vector<HardestPentaplet> mine_batch(const CmBatch& batch, const DistanceMatrix& dmat);

}  // namespace hpiln

#endif  // HPILN_MINING_HPP_
