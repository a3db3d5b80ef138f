#include "hpiln/mining.hpp"

#include <limits>
#include <string>

namespace hpiln {

namespace {

void check_batch(const CmBatch& batch, const DistanceMatrix& dmat) {
  batch.spec.validate();
  if (batch.indices.size() != batch.spec.batch_size()) {
    throw input_error("batch index count " + std::to_string(batch.indices.size()) +
                      " does not match spec size " + std::to_string(batch.spec.batch_size()));
  }
  if (dmat.n != batch.size()) {
    throw input_error("distance matrix size " + std::to_string(dmat.n) +
                      " does not match batch size " + std::to_string(batch.size()));
  }
}

// argmax/argmin over candidate positions; strict comparison keeps the first
// (lowest) position on ties.
struct Extremum {
  std::size_t pos = 0;
  double dist = 0.0;
  bool found = false;

  void consider_max(std::size_t p, double d) {
    if (!found || d > dist) {
      pos = p;
      dist = d;
      found = true;
    }
  }
  void consider_min(std::size_t p, double d) {
    if (!found || d < dist) {
      pos = p;
      dist = d;
      found = true;
    }
  }
};

}  // namespace

std::pair<std::size_t, std::size_t> mine_global(const CmBatch& batch, const DistanceMatrix& dmat,
                                                std::size_t anchor) {
  check_batch(batch, dmat);
  if (anchor >= batch.size()) throw input_error("anchor position out of range");
  const std::size_t anchor_block = batch.block_of(anchor);
  Extremum pos, neg;
  for (std::size_t q = 0; q < batch.size(); ++q) {
    if (q == anchor) continue;
    const double d = dmat(anchor, q);
    if (batch.block_of(q) == anchor_block) {
      pos.consider_max(q, d);
    } else {
      neg.consider_min(q, d);
    }
  }
  return {pos.pos, neg.pos};
}

std::pair<std::size_t, std::size_t> mine_cross(const CmBatch& batch, const DistanceMatrix& dmat,
                                               std::size_t anchor) {
  check_batch(batch, dmat);
  if (anchor >= batch.size()) throw input_error("anchor position out of range");
  const std::size_t anchor_block = batch.block_of(anchor);
  const bool anchor_rgb = batch.is_rgb_slot(anchor);
  Extremum pos, neg;
  for (std::size_t q = 0; q < batch.size(); ++q) {
    if (batch.is_rgb_slot(q) == anchor_rgb) continue;  // candidates: opposite modality only
    const double d = dmat(anchor, q);
    if (batch.block_of(q) == anchor_block) {
      pos.consider_max(q, d);
    } else {
      neg.consider_min(q, d);
    }
  }
  return {pos.pos, neg.pos};
}

std::vector<HardestPentaplet> mine_batch(const CmBatch& batch, const DistanceMatrix& dmat) {
  check_batch(batch, dmat);
  std::vector<HardestPentaplet> out;
  out.reserve(batch.size());
  for (std::size_t a = 0; a < batch.size(); ++a) {
    const auto [gp, gn] = mine_global(batch, dmat, a);
    const auto [cp, cn] = mine_cross(batch, dmat, a);
    out.push_back({a, gp, gn, cp, cn, dmat(a, gp), dmat(a, gn), dmat(a, cp), dmat(a, cn)});
  }
  return out;
}

}  // namespace hpiln
