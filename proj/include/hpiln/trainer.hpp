#ifndef HPILN_TRAINER_HPP_
#define HPILN_TRAINER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/losses.hpp"
#include "hpiln/model.hpp"
#include "hpiln/optim.hpp"
#include "hpiln/sampler.hpp"

namespace hpiln {

// Training objectives selectable per run.
enum class LossKind {
  Identity,             // id
  HardTriplet,          // ht   (modality-blind batch-hard)
  HardTripletIdentity,  // hti  (ht + id)
  HardPentaplet,        // hp
  Hpi,                  // hpi  (hp + id)
};

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);
bool uses_identity_head(LossKind kind);
bool uses_pentaplet(LossKind kind);

struct TrainConfig {
  CmBatchSpec batch;       // P, K; seed below overrides batch.seed
  LossConfig loss;
  AdamConfig adam;
  std::size_t iterations = 2000;  // 0 is legal: train returns the model unchanged
  std::uint64_t seed = 0;
  LossKind kind = LossKind::Hpi;

  void validate() const;
};

struct HistoryRow {
  std::size_t iteration = 0;
  double loss = 0.0;
  double pentaplet = 0.0;  // hard pentaplet component, 0 when not in the objective
  double identity = 0.0;   // identity component, 0 when not in the objective
};

// Model plus the classifier head trained alongside it (the head is training
// scaffolding; embedding export only needs the model).
struct Trainable {
  EmbeddingModel model;
  ClassifierHead head;
};

// Mutable views over every parameter tensor, enumeration order fixed:
// model layers (weight, bias) in depth order, then head weight, head bias.
std::vector<std::span<double>> parameter_views(Trainable& trainable);

// Loss and flat parameter gradient (concatenated in parameter_views order)
// for one fixed batch. `inputs` rows are in cm-batch layout, `class_labels`
// are 0-based identity class indices per row.
struct StepEval {
  double loss = 0.0;
  double pentaplet = 0.0;
  double identity = 0.0;
  std::vector<double> param_grads;
};

StepEval evaluate_training_loss(const Trainable& trainable, const Matrix& inputs,
                                const CmBatch& layout,
                                std::span<const std::uint32_t> class_labels, LossKind kind,
                                const LossConfig& config);

// Classifier head sized for the distinct identities of `dataset`;
// class index = rank of the identity label among sorted distinct labels.
ClassifierHead make_head(const EmbeddingDataset& dataset, std::size_t embed_dim, Rng& rng);
std::vector<std::uint32_t> identity_class_map(const EmbeddingDataset& dataset);

struct TrainResult {
  Trainable trained;
  std::vector<HistoryRow> history;
};

// Per iteration: sample a cm-batch, forward the model, evaluate the selected
// objective, backpropagate, Adam-update every parameter. Deterministic given
// the config seed. Throws numeric_error naming the iteration if the loss or
// a gradient goes non-finite.
TrainResult train(const EmbeddingDataset& dataset, Trainable trainable,
                  const TrainConfig& config);

// Runs every record through the model; identity/modality/camera preserved.
EmbeddingDataset export_embeddings(const EmbeddingModel& model, const EmbeddingDataset& dataset);

}  // namespace hpiln

#endif  // HPILN_TRAINER_HPP_
