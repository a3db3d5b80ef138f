#include "hpiln/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "hpiln/distance.hpp"

namespace hpiln {

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "id") return LossKind::Identity;
  if (name == "ht") return LossKind::HardTriplet;
  if (name == "hti") return LossKind::HardTripletIdentity;
  if (name == "hp") return LossKind::HardPentaplet;
  if (name == "hpi") return LossKind::Hpi;
  throw input_error("unknown loss '" + name + "' (expected id|ht|hti|hp|hpi)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Identity: return "id";
    case LossKind::HardTriplet: return "ht";
    case LossKind::HardTripletIdentity: return "hti";
    case LossKind::HardPentaplet: return "hp";
    case LossKind::Hpi: return "hpi";
  }
  throw input_error("bad loss kind");
}

bool uses_identity_head(LossKind kind) {
  return kind == LossKind::Identity || kind == LossKind::HardTripletIdentity ||
         kind == LossKind::Hpi;
}

bool uses_pentaplet(LossKind kind) {
  return kind == LossKind::HardPentaplet || kind == LossKind::Hpi;
}

void TrainConfig::validate() const {
  batch.validate();
  loss.validate();
  adam.validate();
}

std::vector<std::uint32_t> identity_class_map(const EmbeddingDataset& dataset) {
  std::set<std::uint32_t> distinct;
  for (const auto& rec : dataset.records) distinct.insert(rec.identity);
  std::vector<std::uint32_t> sorted(distinct.begin(), distinct.end());
  std::vector<std::uint32_t> classes(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), dataset.records[i].identity);
    classes[i] = static_cast<std::uint32_t>(it - sorted.begin());
  }
  return classes;
}

ClassifierHead make_head(const EmbeddingDataset& dataset, std::size_t embed_dim, Rng& rng) {
  std::set<std::uint32_t> distinct;
  for (const auto& rec : dataset.records) distinct.insert(rec.identity);
  const std::size_t t = distinct.size();
  if (t < 2) throw input_error("classifier head needs at least 2 identity classes");
  ClassifierHead head;
  head.weight = Matrix(t, embed_dim);
  head.bias.assign(t, 0.0);
  const double s = std::sqrt(6.0 / static_cast<double>(embed_dim + t));
  for (std::size_t i = 0; i < head.weight.count(); ++i) head.weight.data()[i] = rng.uniform(-s, s);
  for (auto& b : head.bias) b = rng.uniform(-s, s);
  return head;
}

std::vector<std::span<double>> parameter_views(Trainable& trainable) {
  std::vector<std::span<double>> views;
  for (auto& layer : trainable.model.layers()) {
    views.emplace_back(layer.weight.data(), layer.weight.count());
    views.emplace_back(layer.bias.data(), layer.bias.size());
  }
  views.emplace_back(trainable.head.weight.data(), trainable.head.weight.count());
  views.emplace_back(trainable.head.bias.data(), trainable.head.bias.size());
  return views;
}

StepEval evaluate_training_loss(const Trainable& trainable, const Matrix& inputs,
                                const CmBatch& layout,
                                std::span<const std::uint32_t> class_labels, LossKind kind,
                                const LossConfig& config) {
  config.validate();
  const auto cache = trainable.model.forward_cached(inputs);
  const Matrix& embeddings = cache.outputs;
  const std::size_t n = embeddings.rows();

  StepEval eval;
  Matrix grad_embeddings(n, embeddings.cols(), 0.0);
  Matrix head_weight_grad(trainable.head.weight.rows(), trainable.head.weight.cols(), 0.0);
  std::vector<double> head_bias_grad(trainable.head.bias.size(), 0.0);

  if (uses_pentaplet(kind)) {
    const auto hp = hard_pentaplet_loss(layout, embeddings, config);
    eval.pentaplet = hp.value;
    eval.loss += hp.value;
    for (std::size_t i = 0; i < grad_embeddings.count(); ++i) {
      grad_embeddings.data()[i] += hp.grad.data()[i];
    }
  } else if (kind == LossKind::HardTriplet || kind == LossKind::HardTripletIdentity) {
    const auto ht = hard_triplet_loss(embeddings, class_labels, config.margin);
    eval.loss += ht.value;
    for (std::size_t i = 0; i < grad_embeddings.count(); ++i) {
      grad_embeddings.data()[i] += ht.grad.data()[i];
    }
  }

  if (uses_identity_head(kind)) {
    const Matrix logits = trainable.head.forward(embeddings);
    const auto id = identity_loss(logits, class_labels);
    eval.identity = id.value;
    eval.loss += config.identity_weight * id.value;
    // Push the weighted logit gradient through the head: accumulate head
    // parameter gradients and the embedding-path contribution.
    const double w = config.identity_weight;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < trainable.head.num_classes(); ++j) {
        const double g = w * id.grad(i, j);
        head_bias_grad[j] += g;
        for (std::size_t k = 0; k < embeddings.cols(); ++k) {
          head_weight_grad(j, k) += g * embeddings(i, k);
          grad_embeddings(i, k) += g * trainable.head.weight(j, k);
        }
      }
    }
  }

  auto model_grads = trainable.model.zero_grads();
  trainable.model.backward(cache, grad_embeddings, model_grads);

  for (const auto& layer : model_grads.layers) {
    eval.param_grads.insert(eval.param_grads.end(), layer.weight.data(),
                            layer.weight.data() + layer.weight.count());
    eval.param_grads.insert(eval.param_grads.end(), layer.bias.begin(), layer.bias.end());
  }
  eval.param_grads.insert(eval.param_grads.end(), head_weight_grad.data(),
                          head_weight_grad.data() + head_weight_grad.count());
  eval.param_grads.insert(eval.param_grads.end(), head_bias_grad.begin(), head_bias_grad.end());
  return eval;
}

TrainResult train(const EmbeddingDataset& dataset, Trainable trainable,
                  const TrainConfig& config) {
  config.validate();
  dataset.validate();
  const auto class_map = identity_class_map(dataset);

  Rng sample_rng(Rng::derive(config.seed, "sampler"));
  CmBatchSpec batch_spec = config.batch;
  batch_spec.seed = config.seed;

  auto views = parameter_views(trainable);
  std::vector<AdamState> states;
  states.reserve(views.size());
  for (const auto& view : views) states.emplace_back(view.size());

  TrainResult result;
  result.history.reserve(config.iterations);
  std::vector<std::uint32_t> labels(batch_spec.batch_size());

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const CmBatch batch = sample_cm_batch(dataset, batch_spec, sample_rng);
    const Matrix inputs = gather_vectors(dataset, batch.indices);
    for (std::size_t i = 0; i < batch.indices.size(); ++i) {
      labels[i] = class_map[batch.indices[i]];
    }

    StepEval eval;
    try {
      eval = evaluate_training_loss(trainable, inputs, batch, labels, config.kind, config.loss);
    } catch (const numeric_error& e) {
      throw numeric_error("iteration " + std::to_string(iter) + ": " + e.what());
    }
    if (!std::isfinite(eval.loss)) {
      throw numeric_error("iteration " + std::to_string(iter) + ": loss is non-finite");
    }

    std::size_t offset = 0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      const std::span<const double> grads(eval.param_grads.data() + offset, views[v].size());
      try {
        adam_step(views[v], grads, states[v], config.adam);
      } catch (const numeric_error& e) {
        throw numeric_error("iteration " + std::to_string(iter) + ": " + e.what());
      }
      offset += views[v].size();
    }

    result.history.push_back({iter, eval.loss, eval.pentaplet, eval.identity});
  }

  result.trained = std::move(trainable);
  return result;
}

EmbeddingDataset export_embeddings(const EmbeddingModel& model, const EmbeddingDataset& dataset) {
  dataset.validate();
  if (dataset.dim != model.input_dim()) {
    throw input_error("dataset dim " + std::to_string(dataset.dim) + " does not match model input " +
                      std::to_string(model.input_dim()));
  }
  const Matrix outputs = model.forward(dataset_matrix(dataset));
  EmbeddingDataset out;
  out.dim = model.output_dim();
  out.records.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    EmbeddingRecord rec;
    rec.identity = dataset.records[i].identity;
    rec.modality = dataset.records[i].modality;
    rec.camera = dataset.records[i].camera;
    rec.vec.assign(outputs.row(i).begin(), outputs.row(i).end());
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace hpiln
