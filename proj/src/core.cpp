#include "hpiln/core.hpp"

#include <cmath>

namespace hpiln {

std::string to_string(Modality m) { return m == Modality::Rgb ? "RGB" : "IR"; }

Modality modality_from_string(const std::string& s) {
  if (s == "RGB" || s == "rgb") return Modality::Rgb;
  if (s == "IR" || s == "ir") return Modality::Ir;
  throw input_error("unknown modality: '" + s + "'");
}

void EmbeddingDataset::validate() const {
  if (records.empty()) throw input_error("dataset is empty");
  if (dim == 0) throw input_error("dataset dimension must be >= 1");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.vec.size() != dim) {
      throw input_error("record " + std::to_string(i) + " has dimension " +
                        std::to_string(r.vec.size()) + ", dataset declares " +
                        std::to_string(dim));
    }
    for (double v : r.vec) {
      if (!std::isfinite(v)) {
        throw input_error("record " + std::to_string(i) + " has a non-finite component");
      }
    }
  }
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix to_matrix(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw input_error("no vectors given");
  const std::size_t d = vectors.front().size();
  if (d == 0) throw input_error("vectors must have dimension >= 1");
  Matrix out(vectors.size(), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) {
      throw input_error("vector " + std::to_string(i) + " has dimension " +
                        std::to_string(vectors[i].size()) + ", expected " + std::to_string(d));
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(vectors[i][k])) {
        throw input_error("vector " + std::to_string(i) + " has a non-finite component");
      }
      out(i, k) = vectors[i][k];
    }
  }
  return out;
}

Matrix gather_vectors(const EmbeddingDataset& dataset, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), dataset.dim);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dataset.size()) {
      throw input_error("index " + std::to_string(indices[i]) + " out of range");
    }
    const auto& vec = dataset.records[indices[i]].vec;
    for (std::size_t k = 0; k < dataset.dim; ++k) out(i, k) = vec[k];
  }
  return out;
}

Matrix dataset_matrix(const EmbeddingDataset& dataset) {
  Matrix out(dataset.size(), dataset.dim);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& vec = dataset.records[i].vec;
    for (std::size_t k = 0; k < dataset.dim; ++k) out(i, k) = vec[k];
  }
  return out;
}

}  // namespace hpiln
