#ifndef HPILN_IO_HPP_
#define HPILN_IO_HPP_

#include <filesystem>

#include "hpiln/core.hpp"

namespace hpiln {

// EMB1 binary embedding file, little-endian:
//   magic "EMB1", u32 record count, u32 dimension d,
//   per record: u32 identity, u8 modality (0=RGB, 1=IR), u8 camera,
//   2 zero padding bytes, d x f32 vector.
EmbeddingDataset read_emb(const std::filesystem::path& path);
void write_emb(const std::filesystem::path& path, const EmbeddingDataset& dataset);

// CSV alternative. Header: identity,modality,camera,f0,...,f{d-1};
// modality written as "RGB"/"IR". Floats carry f32 precision.
EmbeddingDataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const EmbeddingDataset& dataset);

// Dispatches on extension: ".csv" -> CSV, anything else -> EMB1.
EmbeddingDataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const EmbeddingDataset& dataset);

}  // namespace hpiln

#endif  // HPILN_IO_HPP_
