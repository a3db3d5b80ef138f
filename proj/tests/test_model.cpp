#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hpiln/model.hpp"
#include "hpiln/rng.hpp"
#include "oracles.hpp"

using namespace hpiln;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hpiln_model_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("identity map reproduces its input") {
  const EmbeddingModel model = EmbeddingModel::identity_map(3);
  CHECK(model.input_dim() == 3);
  CHECK(model.output_dim() == 3);
  CHECK_FALSE(model.has_hidden());
  const Matrix in = to_matrix({{1.0, -2.0, 0.5}, {4.0, 0.0, -1.0}});
  CHECK(model.forward(in) == in);
}

TEST_CASE("create builds one or two layers with bounded init") {
  Rng rng(9);
  const EmbeddingModel single = EmbeddingModel::create(5, 0, 2, rng);
  CHECK(single.layers().size() == 1);
  CHECK(single.input_dim() == 5);
  CHECK(single.output_dim() == 2);
  CHECK(single.hidden_dim() == 0);

  const EmbeddingModel deep = EmbeddingModel::create(5, 7, 2, rng);
  CHECK(deep.layers().size() == 2);
  CHECK(deep.has_hidden());
  CHECK(deep.hidden_dim() == 7);
  const double s0 = std::sqrt(6.0 / (5 + 7));
  for (std::size_t i = 0; i < deep.layers()[0].weight.count(); ++i) {
    CHECK(std::abs(deep.layers()[0].weight.data()[i]) <= s0);
  }
  for (const double b : deep.layers()[0].bias) CHECK(std::abs(b) <= s0);

  CHECK_THROWS_AS(EmbeddingModel::create(0, 4, 2, rng), input_error);
  CHECK_THROWS_AS(EmbeddingModel::create(4, 4, 0, rng), input_error);
}

TEST_CASE("forward applies affine -> relu -> affine") {
  // Hand-built 2-layer model: hidden = relu(x - 1), output = 2 * hidden.
  EmbeddingModel model = EmbeddingModel::identity_map(1);
  model.layers()[0].bias[0] = -1.0;
  AffineLayer out_layer;
  out_layer.weight = Matrix(1, 1, 2.0);
  out_layer.bias = {0.0};
  model.layers().push_back(out_layer);

  const Matrix in = to_matrix({{3.0}, {0.5}, {1.0}});
  const Matrix out = model.forward(in);
  CHECK(out(0, 0) == 4.0);  // relu(2) * 2
  CHECK(out(1, 0) == 0.0);  // relu(-0.5) = 0
  CHECK(out(2, 0) == 0.0);  // relu(0) = 0

  const auto cache = model.forward_cached(in);
  CHECK(cache.hidden_pre(0, 0) == 2.0);
  CHECK(cache.hidden_pre(1, 0) == -0.5);
  CHECK(cache.outputs == out);
  CHECK_THROWS_AS(model.forward(Matrix(1, 2, 0.0)), input_error);
}

TEST_CASE("backward blocks gradient through inactive relu units") {
  EmbeddingModel model = EmbeddingModel::identity_map(1);
  model.layers()[0].bias[0] = -1.0;
  AffineLayer out_layer;
  out_layer.weight = Matrix(1, 1, 2.0);
  out_layer.bias = {0.0};
  model.layers().push_back(out_layer);

  const Matrix in = to_matrix({{3.0}, {0.5}});
  const auto cache = model.forward_cached(in);
  Matrix grad_out(2, 1, 1.0);
  auto grads = model.zero_grads();
  const Matrix grad_in = model.backward(cache, grad_out, grads);

  CHECK(grad_in(0, 0) == 2.0);  // active: dL/dx = w1 * w0 = 2 * 1
  CHECK(grad_in(1, 0) == 0.0);  // relu dead
  // Output layer weight grad: sum over rows of g * hidden = 1*2 + 1*0.
  CHECK(grads.layers[1].weight(0, 0) == 2.0);
  CHECK(grads.layers[1].bias[0] == 2.0);
  // Input layer sees only the active row: g=2 times input 3.
  CHECK(grads.layers[0].weight(0, 0) == 6.0);
  CHECK(grads.layers[0].bias[0] == 2.0);
}

TEST_CASE("single-layer backward is plain affine") {
  EmbeddingModel model = EmbeddingModel::identity_map(2);
  const Matrix in = to_matrix({{1.0, 2.0}});
  const auto cache = model.forward_cached(in);
  Matrix grad_out = to_matrix({{3.0, -1.0}});
  auto grads = model.zero_grads();
  const Matrix grad_in = model.backward(cache, grad_out, grads);
  CHECK(grad_in == grad_out);  // identity weights
  CHECK(grads.layers[0].weight(0, 0) == 3.0);
  CHECK(grads.layers[0].weight(0, 1) == 6.0);
  CHECK(grads.layers[0].weight(1, 1) == -2.0);
  CHECK(grads.layers[0].bias[1] == -1.0);
}

TEST_CASE("model file round trip is exact") {
  TempDir tmp;
  Rng rng(33);
  const EmbeddingModel model = EmbeddingModel::create(6, 5, 3, rng);
  const fs::path p = tmp.path / "m.hmd";
  write_model(p, model);
  const EmbeddingModel back = read_model(p);
  REQUIRE(back.layers().size() == model.layers().size());
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    CHECK(back.layers()[l].weight == model.layers()[l].weight);
    CHECK(back.layers()[l].bias == model.layers()[l].bias);
  }
  // Same outputs bit for bit.
  const Matrix in = oracles::random_matrix(4, 6, rng);
  CHECK(back.forward(in) == model.forward(in));
}

TEST_CASE("model reader rejects malformed files") {
  TempDir tmp;
  const fs::path p = tmp.path / "bad.hmd";

  SUBCASE("bad magic") {
    std::ofstream(p, std::ios::binary) << "XXXX";
    CHECK_THROWS_AS(read_model(p), data_error);
  }
  SUBCASE("unsupported layer count") {
    std::string buf = "HMD1";
    buf.push_back(3);
    buf.append(3, '\0');
    std::ofstream(p, std::ios::binary) << buf;
    CHECK_THROWS_AS(read_model(p), data_error);
  }
  SUBCASE("truncated") {
    Rng rng(1);
    write_model(p, EmbeddingModel::create(3, 0, 2, rng));
    std::ifstream in(p, std::ios::binary);
    std::string bytes(std::istreambuf_iterator<char>(in), {});
    std::ofstream(p, std::ios::binary) << bytes.substr(0, bytes.size() - 1);
    CHECK_THROWS_AS(read_model(p), data_error);
  }
  SUBCASE("trailing bytes") {
    Rng rng(1);
    write_model(p, EmbeddingModel::create(3, 0, 2, rng));
    std::ofstream(p, std::ios::binary | std::ios::app) << "z";
    CHECK_THROWS_AS(read_model(p), data_error);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_model(tmp.path / "none.hmd"), data_error); }
}
