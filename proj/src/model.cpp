#include "hpiln/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace hpiln {

namespace {

AffineLayer init_layer(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
  AffineLayer layer;
  layer.weight = Matrix(out_dim, in_dim);
  layer.bias.assign(out_dim, 0.0);
  const double s = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (std::size_t i = 0; i < layer.weight.count(); ++i) {
    layer.weight.data()[i] = rng.uniform(-s, s);
  }
  for (auto& b : layer.bias) b = rng.uniform(-s, s);
  return layer;
}

void affine_forward(const AffineLayer& layer, const Matrix& in, Matrix& out) {
  for (std::size_t i = 0; i < in.rows(); ++i) {
    for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
      double s = layer.bias[o];
      for (std::size_t k = 0; k < layer.weight.cols(); ++k) s += layer.weight(o, k) * in(i, k);
      out(i, o) = s;
    }
  }
}

// Accumulates dL/dW, dL/db and returns dL/din for one affine layer.
Matrix affine_backward(const AffineLayer& layer, const Matrix& in, const Matrix& grad_out,
                       AffineLayer& grads) {
  for (std::size_t i = 0; i < in.rows(); ++i) {
    for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
      const double g = grad_out(i, o);
      grads.bias[o] += g;
      for (std::size_t k = 0; k < layer.weight.cols(); ++k) {
        grads.weight(o, k) += g * in(i, k);
      }
    }
  }
  Matrix grad_in(in.rows(), layer.weight.cols(), 0.0);
  for (std::size_t i = 0; i < in.rows(); ++i) {
    for (std::size_t k = 0; k < layer.weight.cols(); ++k) {
      double s = 0.0;
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        s += layer.weight(o, k) * grad_out(i, o);
      }
      grad_in(i, k) = s;
    }
  }
  return grad_in;
}

}  // namespace

EmbeddingModel EmbeddingModel::create(std::size_t input_dim, std::size_t hidden_dim,
                                      std::size_t output_dim, Rng& rng) {
  if (input_dim == 0 || output_dim == 0) throw input_error("model dims must be >= 1");
  EmbeddingModel model;
  if (hidden_dim == 0) {
    model.layers_.push_back(init_layer(output_dim, input_dim, rng));
  } else {
    model.layers_.push_back(init_layer(hidden_dim, input_dim, rng));
    model.layers_.push_back(init_layer(output_dim, hidden_dim, rng));
  }
  return model;
}

EmbeddingModel EmbeddingModel::identity_map(std::size_t dim) {
  if (dim == 0) throw input_error("model dims must be >= 1");
  EmbeddingModel model;
  AffineLayer layer;
  layer.weight = Matrix(dim, dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) layer.weight(i, i) = 1.0;
  layer.bias.assign(dim, 0.0);
  model.layers_.push_back(std::move(layer));
  return model;
}

Matrix EmbeddingModel::forward(const Matrix& inputs) const {
  return forward_cached(inputs).outputs;
}

EmbeddingModel::Cache EmbeddingModel::forward_cached(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) {
    throw input_error("input dim " + std::to_string(inputs.cols()) + " does not match model " +
                      std::to_string(input_dim()));
  }
  Cache cache;
  cache.inputs = inputs;
  if (!has_hidden()) {
    cache.outputs = Matrix(inputs.rows(), output_dim());
    affine_forward(layers_[0], inputs, cache.outputs);
    return cache;
  }
  cache.hidden_pre = Matrix(inputs.rows(), layers_[0].weight.rows());
  affine_forward(layers_[0], inputs, cache.hidden_pre);
  Matrix hidden(cache.hidden_pre.rows(), cache.hidden_pre.cols());
  for (std::size_t i = 0; i < hidden.count(); ++i) {
    hidden.data()[i] = std::max(0.0, cache.hidden_pre.data()[i]);
  }
  cache.outputs = Matrix(inputs.rows(), output_dim());
  affine_forward(layers_[1], hidden, cache.outputs);
  return cache;
}

EmbeddingModel::Grads EmbeddingModel::zero_grads() const {
  Grads grads;
  for (const auto& layer : layers_) {
    AffineLayer g;
    g.weight = Matrix(layer.weight.rows(), layer.weight.cols(), 0.0);
    g.bias.assign(layer.bias.size(), 0.0);
    grads.layers.push_back(std::move(g));
  }
  return grads;
}

Matrix EmbeddingModel::backward(const Cache& cache, const Matrix& grad_outputs,
                                Grads& grads) const {
  if (!has_hidden()) {
    return affine_backward(layers_[0], cache.inputs, grad_outputs, grads.layers[0]);
  }
  Matrix hidden(cache.hidden_pre.rows(), cache.hidden_pre.cols());
  for (std::size_t i = 0; i < hidden.count(); ++i) {
    hidden.data()[i] = std::max(0.0, cache.hidden_pre.data()[i]);
  }
  Matrix grad_hidden = affine_backward(layers_[1], hidden, grad_outputs, grads.layers[1]);
  // ReLU: pass gradient only where the pre-activation was positive.
  for (std::size_t i = 0; i < grad_hidden.count(); ++i) {
    if (cache.hidden_pre.data()[i] <= 0.0) grad_hidden.data()[i] = 0.0;
  }
  return affine_backward(layers_[0], cache.inputs, grad_hidden, grads.layers[0]);
}

namespace {

constexpr char kModelMagic[4] = {'H', 'M', 'D', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ModelReader {
  const std::string& bytes;
  std::string name;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw data_error(name + ": truncated model file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[pos + i])) << (8 * i);
    }
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace

void write_model(const std::filesystem::path& path, const EmbeddingModel& model) {
  std::string buf;
  buf.append(kModelMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    put_u32(buf, static_cast<std::uint32_t>(layer.weight.rows()));
    put_u32(buf, static_cast<std::uint32_t>(layer.weight.cols()));
    for (std::size_t i = 0; i < layer.weight.count(); ++i) put_f64(buf, layer.weight.data()[i]);
    for (double b : layer.bias) put_f64(buf, b);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw data_error("write failed for '" + path.string() + "'");
}

EmbeddingModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = std::move(ss).str();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw data_error(path.string() + ": not a HMD1 model file");
  }
  ModelReader r{bytes, path.string(), 4};
  const std::uint32_t layer_count = r.u32();
  if (layer_count < 1 || layer_count > 2) {
    throw data_error(path.string() + ": unsupported layer count " + std::to_string(layer_count));
  }
  EmbeddingModel model;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint32_t out_dim = r.u32();
    const std::uint32_t in_dim = r.u32();
    if (out_dim == 0 || in_dim == 0) throw data_error(path.string() + ": zero layer dimension");
    AffineLayer layer;
    layer.weight = Matrix(out_dim, in_dim);
    for (std::size_t i = 0; i < layer.weight.count(); ++i) layer.weight.data()[i] = r.f64();
    layer.bias.resize(out_dim);
    for (auto& b : layer.bias) b = r.f64();
    model.layers().push_back(std::move(layer));
  }
  if (r.pos != bytes.size()) throw data_error(path.string() + ": trailing bytes");
  return model;
}

}  // namespace hpiln
