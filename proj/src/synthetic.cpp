#include "hpiln/synthetic.hpp"

#include <array>

#include "hpiln/rng.hpp"

namespace hpiln {

void SyntheticSpec::validate() const {
  if (num_identities < 2) throw input_error("need at least 2 identities");
  if (samples_per_identity_per_modality < 1) {
    throw input_error("need at least 1 sample per modality");
  }
  if (input_dim < 1) throw input_error("input dim must be >= 1");
  if (noise_sigma < 0.0 || identity_spread < 0.0 || modality_offset < 0.0) {
    throw input_error("spread/offset/sigma must be >= 0");
  }
}

EmbeddingDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  constexpr std::array<std::uint8_t, 4> kRgbCameras{1, 2, 4, 5};
  constexpr std::array<std::uint8_t, 2> kIrCameras{3, 6};

  Rng rng(spec.seed);
  EmbeddingDataset dataset;
  dataset.dim = spec.input_dim;
  dataset.records.reserve(2 * spec.num_identities * spec.samples_per_identity_per_modality);

  std::vector<double> center(spec.input_dim);
  std::vector<double> offset(spec.input_dim);
  for (std::size_t id = 0; id < spec.num_identities; ++id) {
    for (auto& c : center) c = spec.identity_spread * rng.normal();
    for (auto& o : offset) o = spec.modality_offset * rng.normal();
    for (Modality m : {Modality::Rgb, Modality::Ir}) {
      for (std::size_t j = 0; j < spec.samples_per_identity_per_modality; ++j) {
        EmbeddingRecord rec;
        rec.identity = static_cast<std::uint32_t>(id);
        rec.modality = m;
        rec.camera = m == Modality::Rgb ? kRgbCameras[j % kRgbCameras.size()]
                                        : kIrCameras[j % kIrCameras.size()];
        rec.vec.resize(spec.input_dim);
        for (std::size_t k = 0; k < spec.input_dim; ++k) {
          const double base = center[k] + (m == Modality::Ir ? offset[k] : 0.0);
          rec.vec[k] = base + spec.noise_sigma * rng.normal();
        }
        dataset.records.push_back(std::move(rec));
      }
    }
  }
  return dataset;
}

}  // namespace hpiln
