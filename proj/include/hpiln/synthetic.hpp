#ifndef HPILN_SYNTHETIC_HPP_
#define HPILN_SYNTHETIC_HPP_

#include <cstdint>

#include "hpiln/core.hpp"

namespace hpiln {

// Gaussian cluster generator standing in for a real cross-modality dataset.
// Each identity gets a cluster center; RGB samples scatter around it and IR
// samples around center + a per-identity offset vector.
struct SyntheticSpec {
  std::size_t num_identities = 5;
  std::size_t samples_per_identity_per_modality = 10;
  std::size_t input_dim = 8;
  double identity_spread = 3.0;   // stddev of cluster centers
  double modality_offset = 1.5;   // stddev of the per-identity RGB->IR shift
  double noise_sigma = 0.3;       // per-sample noise
  std::uint64_t seed = 0;

  void validate() const;  // num_identities >= 2, sigma >= 0
};

// Deterministic in the spec. Record order: per identity, RGB samples then IR
// samples. RGB cameras cycle {1,2,4,5}; IR cameras cycle {3,6}.
EmbeddingDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace hpiln

#endif  // HPILN_SYNTHETIC_HPP_
