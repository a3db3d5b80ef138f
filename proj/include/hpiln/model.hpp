#ifndef HPILN_MODEL_HPP_
#define HPILN_MODEL_HPP_

#include <filesystem>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/rng.hpp"

namespace hpiln {

struct AffineLayer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
};

// One or two affine maps with an elementwise max(0, x) between them.
// Weights and biases start uniform in [-s, s], s = sqrt(6/(fan_in+fan_out)).
class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  // hidden_dim == 0 builds a single affine layer.
  static EmbeddingModel create(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t output_dim, Rng& rng);

  // Exact identity map (square, no hidden layer); used by tests and tools.
  static EmbeddingModel identity_map(std::size_t dim);

  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  std::size_t output_dim() const { return layers_.back().weight.rows(); }
  bool has_hidden() const { return layers_.size() == 2; }
  std::size_t hidden_dim() const { return has_hidden() ? layers_[0].weight.rows() : 0; }

  Matrix forward(const Matrix& inputs) const;

  // Forward pass retaining what backward needs.
  struct Cache {
    Matrix inputs;
    Matrix hidden_pre;  // pre-activation of layer 0 (empty for 1 layer)
    Matrix outputs;
  };
  Cache forward_cached(const Matrix& inputs) const;

  // Accumulates parameter gradients for dLoss/dOutputs into `grads` (same
  // shapes as the model) and returns dLoss/dInputs.
  struct Grads {
    std::vector<AffineLayer> layers;
  };
  Grads zero_grads() const;
  Matrix backward(const Cache& cache, const Matrix& grad_outputs, Grads& grads) const;

  std::vector<AffineLayer>& layers() { return layers_; }
  const std::vector<AffineLayer>& layers() const { return layers_; }

 private:
  std::vector<AffineLayer> layers_;
};

// HMD1 binary model file (little-endian): magic "HMD1", u32 layer count,
// then per layer u32 out, u32 in, out*in f64 weights, out f64 biases.
EmbeddingModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const EmbeddingModel& model);

}  // namespace hpiln

#endif  // HPILN_MODEL_HPP_
