#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hpiln/losses.hpp"
#include "hpiln/sampler.hpp"
#include "hpiln/synthetic.hpp"
#include "hpiln/trainer.hpp"
#include "oracles.hpp"

using namespace hpiln;

namespace {

EmbeddingDataset toy_dataset(std::uint64_t seed = 4) {
  SyntheticSpec spec;
  spec.num_identities = 4;
  spec.samples_per_identity_per_modality = 6;
  spec.input_dim = 5;
  spec.seed = seed;
  return generate_synthetic(spec);
}

Trainable make_trainable(const EmbeddingDataset& ds, std::uint64_t seed,
                         std::size_t hidden = 8, std::size_t out = 3) {
  Rng rng(seed);
  Trainable t;
  t.model = EmbeddingModel::create(ds.dim, hidden, out, rng);
  t.head = make_head(ds, out, rng);
  return t;
}

TrainConfig small_config(LossKind kind, std::size_t iterations) {
  TrainConfig config;
  config.batch.num_identities = 3;
  config.batch.images_per_modality = 2;
  config.iterations = iterations;
  config.kind = kind;
  config.seed = 6;
  return config;
}

bool same_weights(const Trainable& a, const Trainable& b) {
  if (a.model.layers().size() != b.model.layers().size()) return false;
  for (std::size_t l = 0; l < a.model.layers().size(); ++l) {
    if (!(a.model.layers()[l].weight == b.model.layers()[l].weight)) return false;
    if (a.model.layers()[l].bias != b.model.layers()[l].bias) return false;
  }
  return a.head.weight == b.head.weight && a.head.bias == b.head.bias;
}

}  // namespace

TEST_CASE("loss kind names round trip") {
  for (const auto kind : {LossKind::Identity, LossKind::HardTriplet,
                          LossKind::HardTripletIdentity, LossKind::HardPentaplet,
                          LossKind::Hpi}) {
    CHECK(loss_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(loss_kind_from_string("contrastive"), input_error);
  CHECK(uses_identity_head(LossKind::Identity));
  CHECK(uses_identity_head(LossKind::Hpi));
  CHECK_FALSE(uses_identity_head(LossKind::HardPentaplet));
  CHECK(uses_pentaplet(LossKind::Hpi));
  CHECK_FALSE(uses_pentaplet(LossKind::HardTriplet));
}

TEST_CASE("identity_class_map ranks sorted distinct labels") {
  EmbeddingDataset ds;
  ds.dim = 1;
  for (const std::uint32_t id : {50u, 7u, 3u, 7u}) {
    ds.records.push_back({id, Modality::Rgb, 1, {0.0}});
  }
  CHECK(identity_class_map(ds) == std::vector<std::uint32_t>{2, 1, 0, 1});
}

TEST_CASE("make_head sizes to the distinct identities") {
  const EmbeddingDataset ds = toy_dataset();
  Rng rng(8);
  const ClassifierHead head = make_head(ds, 3, rng);
  CHECK(head.num_classes() == 4);
  CHECK(head.dim() == 3);

  EmbeddingDataset single;
  single.dim = 1;
  single.records.push_back({0, Modality::Rgb, 1, {0.0}});
  CHECK_THROWS_AS(make_head(single, 3, rng), input_error);
}

TEST_CASE("parameter_views covers model layers then the head") {
  const EmbeddingDataset ds = toy_dataset();
  Trainable t = make_trainable(ds, 1);
  const auto views = parameter_views(t);
  REQUIRE(views.size() == 6);  // 2 layers x (weight, bias) + head weight, bias
  CHECK(views[0].size() == 8 * 5);
  CHECK(views[1].size() == 8);
  CHECK(views[2].size() == 3 * 8);
  CHECK(views[3].size() == 3);
  CHECK(views[4].size() == 4 * 3);
  CHECK(views[5].size() == 4);
  CHECK(views[0].data() == t.model.layers()[0].weight.data());
  CHECK(views[5].data() == t.head.bias.data());
}

TEST_CASE("evaluate_training_loss matches direct loss composition") {
  const EmbeddingDataset ds = toy_dataset();
  Trainable t = make_trainable(ds, 2);
  const CmBatch layout = make_layout_batch(3, 2);

  // Fixed batch: first 3 identities in layout order.
  CmBatchSpec spec;
  spec.num_identities = 3;
  spec.images_per_modality = 2;
  Rng rng(99);
  const CmBatch sampled = sample_cm_batch(ds, spec, rng);
  const Matrix inputs = gather_vectors(ds, sampled.indices);
  const auto class_map = identity_class_map(ds);
  std::vector<std::uint32_t> labels(sampled.indices.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = class_map[sampled.indices[i]];

  LossConfig config;
  const Matrix embeddings = t.model.forward(inputs);
  const Matrix logits = t.head.forward(embeddings);

  SUBCASE("hp kind: loss equals the pentaplet value") {
    const auto eval = evaluate_training_loss(t, inputs, layout, labels, LossKind::HardPentaplet,
                                             config);
    const auto hp = hard_pentaplet_loss(layout, embeddings, config);
    CHECK(eval.loss == hp.value);
    CHECK(eval.pentaplet == hp.value);
    CHECK(eval.identity == 0.0);
  }

  SUBCASE("id kind: loss equals the weighted identity value") {
    const auto eval = evaluate_training_loss(t, inputs, layout, labels, LossKind::Identity,
                                             config);
    const auto id = identity_loss(logits, labels);
    CHECK(eval.loss == config.identity_weight * id.value);
    CHECK(eval.identity == id.value);
    CHECK(eval.pentaplet == 0.0);
  }

  SUBCASE("hpi kind: loss equals pentaplet plus weighted identity") {
    const auto eval = evaluate_training_loss(t, inputs, layout, labels, LossKind::Hpi, config);
    const auto hp = hard_pentaplet_loss(layout, embeddings, config);
    const auto id = identity_loss(logits, labels);
    CHECK(eval.loss == hp.value + config.identity_weight * id.value);
    CHECK(eval.pentaplet == hp.value);
    CHECK(eval.identity == id.value);
  }

  SUBCASE("hti kind: loss equals hard triplet plus identity") {
    const auto eval = evaluate_training_loss(t, inputs, layout, labels,
                                             LossKind::HardTripletIdentity, config);
    const auto ht = hard_triplet_loss(embeddings, labels, config.margin);
    const auto id = identity_loss(logits, labels);
    CHECK(eval.loss == doctest::Approx(ht.value + id.value).epsilon(1e-15));
    CHECK(eval.pentaplet == 0.0);
    CHECK(eval.identity == id.value);
  }

  SUBCASE("gradient vector length covers every parameter") {
    const auto eval = evaluate_training_loss(t, inputs, layout, labels, LossKind::Hpi, config);
    std::size_t total = 0;
    for (const auto& view : parameter_views(t)) total += view.size();
    CHECK(eval.param_grads.size() == total);
  }
}

TEST_CASE("zero iterations returns the model unchanged") {
  const EmbeddingDataset ds = toy_dataset();
  const Trainable before = make_trainable(ds, 3);
  Trainable copy = before;
  const auto result = train(ds, std::move(copy), small_config(LossKind::Hpi, 0));
  CHECK(result.history.empty());
  CHECK(same_weights(result.trained, before));
}

TEST_CASE("training is deterministic in the seed") {
  const EmbeddingDataset ds = toy_dataset();
  const auto run = [&] {
    return train(ds, make_trainable(ds, 3), small_config(LossKind::Hpi, 40));
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.history.size() == 40);
  CHECK(same_weights(a.trained, b.trained));
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].iteration == i);
  }
}

TEST_CASE("training reduces the loss on the toy problem") {
  const EmbeddingDataset ds = toy_dataset();
  const auto result = train(ds, make_trainable(ds, 3), small_config(LossKind::Hpi, 400));
  REQUIRE(result.history.size() == 400);
  double head_mean = 0.0;
  double tail_mean = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    head_mean += result.history[i].loss / 20.0;
    tail_mean += result.history[400 - 20 + i].loss / 20.0;
  }
  CHECK(tail_mean < head_mean);
}

TEST_CASE("history splits the objective into components") {
  const EmbeddingDataset ds = toy_dataset();
  const auto result = train(ds, make_trainable(ds, 3), small_config(LossKind::Hpi, 5));
  for (const auto& row : result.history) {
    CHECK(row.loss == row.pentaplet + row.identity);  // identity_weight = 1
    CHECK(std::isfinite(row.loss));
  }
}

TEST_CASE("numeric failures name the iteration") {
  const EmbeddingDataset ds = toy_dataset();
  TrainConfig config = small_config(LossKind::Identity, 10);
  // Weight >= 0 passes validation but makes the weighted loss non-finite.
  config.loss.identity_weight = std::numeric_limits<double>::infinity();
  try {
    train(ds, make_trainable(ds, 3), config);
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    CHECK(std::string(e.what()).find("iteration 0") == 0);
  }
}

TEST_CASE("train validates its configuration") {
  const EmbeddingDataset ds = toy_dataset();
  TrainConfig config = small_config(LossKind::Hpi, 1);
  config.batch.num_identities = 1;
  CHECK_THROWS_AS(train(ds, make_trainable(ds, 3), config), input_error);
  config = small_config(LossKind::Hpi, 1);
  config.batch.num_identities = 40;  // more than the dataset carries
  CHECK_THROWS_AS(train(ds, make_trainable(ds, 3), config), data_error);
}

TEST_CASE("export_embeddings preserves metadata and applies the model") {
  const EmbeddingDataset ds = toy_dataset();
  const EmbeddingModel identity = EmbeddingModel::identity_map(ds.dim);
  const EmbeddingDataset out = export_embeddings(identity, ds);
  REQUIRE(out.size() == ds.size());
  CHECK(out.dim == ds.dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(out.records[i].identity == ds.records[i].identity);
    CHECK(out.records[i].modality == ds.records[i].modality);
    CHECK(out.records[i].camera == ds.records[i].camera);
    CHECK(out.records[i].vec == ds.records[i].vec);
  }

  Rng rng(2);
  const EmbeddingModel narrow = EmbeddingModel::create(ds.dim, 0, 2, rng);
  CHECK(export_embeddings(narrow, ds).dim == 2);

  const EmbeddingModel mismatched = EmbeddingModel::identity_map(ds.dim + 1);
  CHECK_THROWS_AS(export_embeddings(mismatched, ds), input_error);
}
