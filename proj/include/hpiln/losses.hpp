#ifndef HPILN_LOSSES_HPP_
#define HPILN_LOSSES_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hpiln/core.hpp"
#include "hpiln/mining.hpp"
#include "hpiln/sampler.hpp"

namespace hpiln {

struct LossConfig {
  // Margin shared by the global and cross-modality hinges. The cross hinge
  // can be overridden separately for ablations.
  double margin = 0.3;
  std::optional<double> cross_margin;
  double identity_weight = 1.0;

  double effective_cross_margin() const { return cross_margin.value_or(margin); }
  void validate() const;
};

// Scalar loss plus gradient with respect to every row of the differentiated
// input (embeddings for the metric losses, logits for the identity loss).
struct LossOutput {
  double value = 0.0;
  Matrix grad;
  std::size_t active_count = 0;  // anchors/terms with a non-zero hinge
};

struct IndexTriplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Plain triplet loss over explicit (a, p, n) index triples into `embeddings`.
// Uses squared distances: sum_i [d(a,p)^2 - d(a,n)^2 + margin]_+, unlike the
// hard variants below which are hinges on unsquared distances.
LossOutput triplet_loss(const Matrix& embeddings, std::span<const IndexTriplet> triplets,
                        double margin);

// Margin goal for one triplet: d(a,p)^2 + margin < d(a,n)^2 (strict).
bool margin_satisfied(std::span<const double> anchor, std::span<const double> positive,
                      std::span<const double> negative, double margin);

// Batch-hard triplet loss, modality-blind: per anchor
// [margin + max same-identity d - min different-identity d]_+ on unsquared
// distances. An anchor whose identity has no other sample contributes a zero
// hardest-positive distance. Throws input_error on a single-identity batch.
LossOutput hard_triplet_loss(const Matrix& embeddings, std::span<const std::uint32_t> labels,
                             double margin);

// Sum over all 2PK anchors of [margin + d(a, global_pos) - d(a, global_neg)]_+
// with hardest-pentaplet mining; unsquared distances, no normalization.
LossOutput hard_global_triplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                    double margin);

// Cross-modality counterpart mined from the opposite-modality half of each block.
LossOutput hard_cross_triplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                   double margin);

// Hard pentaplet loss: (global + cross) / (2PK), both components computed
// from one mining pass and also reported unnormalized.
struct PentapletLossOutput {
  double value = 0.0;
  double global_value = 0.0;  // unnormalized hard global triplet sum
  double cross_value = 0.0;   // unnormalized hard cross-modality triplet sum
  Matrix grad;
  std::size_t active_count = 0;
  std::vector<HardestPentaplet> pentaplets;
};

PentapletLossOutput hard_pentaplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                        const LossConfig& config);

// Identity classifier: class score f_j = w_j . v + b_j.
struct ClassifierHead {
  Matrix weight;              // T x d
  std::vector<double> bias;   // T

  std::size_t num_classes() const { return weight.rows(); }
  std::size_t dim() const { return weight.cols(); }
  Matrix forward(const Matrix& embeddings) const;  // n x d -> n x T logits
};

// Softmax cross-entropy over identity classes, averaged over the batch:
// (1/n) sum_i -log softmax(f_i)[y_i], stabilized by max subtraction.
// grad holds the per-logit gradient (softmax - onehot)/n. Labels are 0-based
// class indices in [0, T).
LossOutput identity_loss(const Matrix& logits, std::span<const std::uint32_t> labels);

// Fused objective: pentaplet + identity_weight * identity. Gradients are
// reported per parameter path; the logit path still has to be pushed through
// the classifier head by the caller.
struct HpiLossOutput {
  double value = 0.0;
  double pentaplet_value = 0.0;
  double identity_value = 0.0;
  Matrix grad_embeddings;
  Matrix grad_logits;
  std::size_t active_count = 0;
};

HpiLossOutput hpi_loss(const CmBatch& batch, const Matrix& embeddings, const Matrix& logits,
                       std::span<const std::uint32_t> labels, const LossConfig& config);

}  // namespace hpiln

#endif  // HPILN_LOSSES_HPP_
