#include <map>
#include <set>

#include "doctest.h"
#include "hpiln/sampler.hpp"
#include "hpiln/synthetic.hpp"

using namespace hpiln;

TEST_CASE("batch spec validation") {
  CmBatchSpec spec;
  spec.num_identities = 1;
  CHECK_THROWS_AS(spec.validate(), input_error);
  spec.num_identities = 2;
  spec.images_per_modality = 0;
  CHECK_THROWS_AS(spec.validate(), input_error);
  spec.images_per_modality = 1;
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.batch_size() == 4);
}

TEST_CASE("layout batch slot arithmetic") {
  const CmBatch batch = make_layout_batch(3, 2);
  REQUIRE(batch.size() == 12);
  CHECK(batch.block_size() == 4);
  // Block b covers positions [4b, 4b+4); first 2 slots RGB, next 2 IR.
  for (std::size_t pos = 0; pos < batch.size(); ++pos) {
    CHECK(batch.indices[pos] == pos);
    CHECK(batch.block_of(pos) == pos / 4);
    CHECK(batch.is_rgb_slot(pos) == (pos % 4 < 2));
  }
}

namespace {

EmbeddingDataset toy_dataset(std::size_t ids, std::size_t per_modality, std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.num_identities = ids;
  spec.samples_per_identity_per_modality = per_modality;
  spec.input_dim = 3;
  spec.seed = seed;
  return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("sampled batch obeys the P x (K rgb + K ir) layout") {
  const EmbeddingDataset ds = toy_dataset(6, 5);
  CmBatchSpec spec;
  spec.num_identities = 4;
  spec.images_per_modality = 3;
  Rng rng(17);

  for (int round = 0; round < 20; ++round) {
    const CmBatch batch = sample_cm_batch(ds, spec, rng);
    REQUIRE(batch.size() == 24);
    std::set<std::uint32_t> batch_ids;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::uint32_t id = ds.records[batch.indices[b * 6]].identity;
      batch_ids.insert(id);
      std::set<std::size_t> distinct;
      for (std::size_t s = 0; s < 6; ++s) {
        const std::size_t pos = b * 6 + s;
        const auto& rec = ds.records[batch.indices[pos]];
        CHECK(rec.identity == id);
        CHECK(rec.modality == (s < 3 ? Modality::Rgb : Modality::Ir));
        distinct.insert(batch.indices[pos]);
      }
      // Pools hold 5 >= K = 3 records, so draws are without replacement.
      CHECK(distinct.size() == 6);
    }
    CHECK(batch_ids.size() == 4);  // identities without replacement
  }
}

TEST_CASE("short pools fall back to sampling with replacement") {
  const EmbeddingDataset ds = toy_dataset(3, 2);
  CmBatchSpec spec;
  spec.num_identities = 2;
  spec.images_per_modality = 4;  // > 2 available per modality
  Rng rng(1);
  const CmBatch batch = sample_cm_batch(ds, spec, rng);
  REQUIRE(batch.size() == 16);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t s = 0; s < 8; ++s) {
      const auto& rec = ds.records[batch.indices[b * 8 + s]];
      CHECK(rec.identity == ds.records[batch.indices[b * 8]].identity);
      CHECK(rec.modality == (s < 4 ? Modality::Rgb : Modality::Ir));
    }
  }
}

TEST_CASE("sampling fails when too few identities carry both modalities") {
  EmbeddingDataset ds = toy_dataset(3, 2);
  // Strip identity 2's IR records: only identities 0 and 1 stay eligible.
  EmbeddingDataset reduced;
  reduced.dim = ds.dim;
  for (const auto& rec : ds.records) {
    if (rec.identity == 2 && rec.modality == Modality::Ir) continue;
    reduced.records.push_back(rec);
  }
  CHECK(eligible_identities(reduced, 2) == std::vector<std::uint32_t>{0, 1});

  CmBatchSpec spec;
  spec.num_identities = 3;
  spec.images_per_modality = 2;
  Rng rng(1);
  CHECK_THROWS_AS(sample_cm_batch(reduced, spec, rng), data_error);
  spec.num_identities = 2;
  CHECK_NOTHROW(sample_cm_batch(reduced, spec, rng));
}

TEST_CASE("sampling is deterministic in the rng seed") {
  const EmbeddingDataset ds = toy_dataset(5, 4);
  CmBatchSpec spec;
  spec.num_identities = 3;
  spec.images_per_modality = 2;
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 5; ++i) {
    CHECK(sample_cm_batch(ds, spec, a).indices == sample_cm_batch(ds, spec, b).indices);
  }
}

TEST_CASE("every eligible identity is eventually sampled") {
  const EmbeddingDataset ds = toy_dataset(6, 2);
  CmBatchSpec spec;
  spec.num_identities = 2;
  spec.images_per_modality = 1;
  Rng rng(7);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 200; ++i) {
    const CmBatch batch = sample_cm_batch(ds, spec, rng);
    for (const std::size_t idx : batch.indices) seen.insert(ds.records[idx].identity);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("infer_layout recovers P and K from record order") {
  // Synthetic order is id-major with RGB before IR, which for one sample per
  // modality is already a cm-batch; rebuild the general case by hand.
  const EmbeddingDataset ds = toy_dataset(4, 3);
  EmbeddingDataset arranged;
  arranged.dim = ds.dim;
  for (std::uint32_t id = 0; id < 4; ++id) {
    for (Modality m : {Modality::Rgb, Modality::Ir}) {
      for (const auto& rec : ds.records) {
        if (rec.identity == id && rec.modality == m) arranged.records.push_back(rec);
      }
    }
  }
  const CmBatch batch = infer_layout(arranged);
  CHECK(batch.spec.num_identities == 4);
  CHECK(batch.spec.images_per_modality == 3);
  CHECK(batch.size() == 24);
}

TEST_CASE("infer_layout rejects non cm-batch orders") {
  EmbeddingDataset ds;
  ds.dim = 1;
  const auto add = [&](std::uint32_t id, Modality m) {
    ds.records.push_back({id, m, 1, {0.0}});
  };

  SUBCASE("all one modality") {
    add(0, Modality::Rgb);
    add(1, Modality::Rgb);
    CHECK_THROWS_AS(infer_layout(ds), data_error);
  }
  SUBCASE("identity changes inside a block") {
    add(0, Modality::Rgb);
    add(1, Modality::Ir);
    add(1, Modality::Rgb);
    add(0, Modality::Ir);
    CHECK_THROWS_AS(infer_layout(ds), data_error);
  }
  SUBCASE("modality pattern broken") {
    add(0, Modality::Rgb);
    add(0, Modality::Ir);
    add(1, Modality::Ir);
    add(1, Modality::Rgb);
    CHECK_THROWS_AS(infer_layout(ds), data_error);
  }
  SUBCASE("single identity") {
    add(0, Modality::Rgb);
    add(0, Modality::Ir);
    CHECK_THROWS_AS(infer_layout(ds), data_error);
  }
  SUBCASE("count does not divide into blocks") {
    add(0, Modality::Rgb);
    add(0, Modality::Ir);
    add(1, Modality::Rgb);
    add(1, Modality::Ir);
    add(2, Modality::Rgb);
    CHECK_THROWS_AS(infer_layout(ds), data_error);
  }
}
