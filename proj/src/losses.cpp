#include "hpiln/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hpiln/distance.hpp"

namespace hpiln {

namespace {

void check_embeddings(const Matrix& embeddings) {
  if (embeddings.rows() == 0 || embeddings.cols() == 0) {
    throw input_error("embeddings must be a non-empty n x d matrix");
  }
  if (!embeddings.all_finite()) throw input_error("non-finite embedding component");
}

// Adds scale * d(d(i,j))/d(row i) and the mirrored term for row j. No-op for
// coincident points (zero subgradient).
void add_distance_gradient(Matrix& grad, const Matrix& embeddings, std::size_t i, std::size_t j,
                           double scale) {
  const double d = euclidean_distance(embeddings.row(i), embeddings.row(j));
  if (d <= kDistanceGradientEpsilon) return;
  for (std::size_t k = 0; k < embeddings.cols(); ++k) {
    const double g = scale * (embeddings(i, k) - embeddings(j, k)) / d;
    grad(i, k) += g;
    grad(j, k) -= g;
  }
}

void check_layout(const CmBatch& batch, const Matrix& embeddings) {
  batch.spec.validate();
  check_embeddings(embeddings);
  if (embeddings.rows() != batch.spec.batch_size()) {
    throw input_error("embedding rows " + std::to_string(embeddings.rows()) +
                      " do not match batch size " + std::to_string(batch.spec.batch_size()));
  }
}

// Shared hinge accumulation over mined pentaplets; `cross` picks which pair.
LossOutput hinge_over_pentaplets(const std::vector<HardestPentaplet>& pentaplets,
                                 const Matrix& embeddings, double margin, bool cross) {
  LossOutput out;
  out.grad = Matrix(embeddings.rows(), embeddings.cols(), 0.0);
  for (const auto& penta : pentaplets) {
    const std::size_t pos = cross ? penta.cross_pos : penta.global_pos;
    const std::size_t neg = cross ? penta.cross_neg : penta.global_neg;
    const double d_pos = cross ? penta.d_cross_pos : penta.d_global_pos;
    const double d_neg = cross ? penta.d_cross_neg : penta.d_global_neg;
    const double term = margin + d_pos - d_neg;
    if (term > 0.0) {
      out.value += term;
      out.active_count += 1;
      add_distance_gradient(out.grad, embeddings, penta.anchor, pos, 1.0);
      add_distance_gradient(out.grad, embeddings, penta.anchor, neg, -1.0);
    }
  }
  return out;
}

}  // namespace

void LossConfig::validate() const {
  if (margin < 0.0) throw input_error("margin must be >= 0");
  if (cross_margin && *cross_margin < 0.0) throw input_error("cross margin must be >= 0");
  if (identity_weight < 0.0) throw input_error("identity weight must be >= 0");
}

LossOutput triplet_loss(const Matrix& embeddings, std::span<const IndexTriplet> triplets,
                        double margin) {
  check_embeddings(embeddings);
  if (margin < 0.0) throw input_error("margin must be >= 0");
  LossOutput out;
  out.grad = Matrix(embeddings.rows(), embeddings.cols(), 0.0);
  for (const auto& t : triplets) {
    if (t.anchor >= embeddings.rows() || t.positive >= embeddings.rows() ||
        t.negative >= embeddings.rows()) {
      throw input_error("triplet index out of range");
    }
    const double d2_pos = squared_distance(embeddings.row(t.anchor), embeddings.row(t.positive));
    const double d2_neg = squared_distance(embeddings.row(t.anchor), embeddings.row(t.negative));
    const double term = d2_pos - d2_neg + margin;
    if (term > 0.0) {
      out.value += term;
      out.active_count += 1;
      // Squared-distance gradients: d(d^2(a,b))/da = 2(a-b).
      for (std::size_t k = 0; k < embeddings.cols(); ++k) {
        const double gp = 2.0 * (embeddings(t.anchor, k) - embeddings(t.positive, k));
        const double gn = 2.0 * (embeddings(t.anchor, k) - embeddings(t.negative, k));
        out.grad(t.anchor, k) += gp - gn;
        out.grad(t.positive, k) -= gp;
        out.grad(t.negative, k) += gn;
      }
    }
  }
  return out;
}

bool margin_satisfied(std::span<const double> anchor, std::span<const double> positive,
                      std::span<const double> negative, double margin) {
  return squared_distance(anchor, positive) + margin < squared_distance(anchor, negative);
}

LossOutput hard_triplet_loss(const Matrix& embeddings, std::span<const std::uint32_t> labels,
                             double margin) {
  check_embeddings(embeddings);
  if (margin < 0.0) throw input_error("margin must be >= 0");
  if (labels.size() != embeddings.rows()) {
    throw input_error("label count does not match embedding rows");
  }
  const bool single_identity =
      std::all_of(labels.begin(), labels.end(), [&](std::uint32_t l) { return l == labels[0]; });
  if (single_identity) throw input_error("batch needs at least 2 identities");

  const DistanceMatrix dmat = pairwise_distances(embeddings);
  LossOutput out;
  out.grad = Matrix(embeddings.rows(), embeddings.cols(), 0.0);
  for (std::size_t a = 0; a < embeddings.rows(); ++a) {
    // Hardest positive defaults to the anchor itself (distance 0) when the
    // identity has no other sample in the batch.
    std::size_t hardest_pos = a;
    double d_pos = 0.0;
    std::size_t hardest_neg = 0;
    double d_neg = 0.0;
    bool have_neg = false;
    for (std::size_t q = 0; q < embeddings.rows(); ++q) {
      if (q == a) continue;
      const double d = dmat(a, q);
      if (labels[q] == labels[a]) {
        if (d > d_pos) {
          d_pos = d;
          hardest_pos = q;
        }
      } else if (!have_neg || d < d_neg) {
        d_neg = d;
        hardest_neg = q;
        have_neg = true;
      }
    }
    const double term = margin + d_pos - d_neg;
    if (term > 0.0) {
      out.value += term;
      out.active_count += 1;
      if (hardest_pos != a) {
        add_distance_gradient(out.grad, embeddings, a, hardest_pos, 1.0);
      }
      add_distance_gradient(out.grad, embeddings, a, hardest_neg, -1.0);
    }
  }
  return out;
}

LossOutput hard_global_triplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                    double margin) {
  check_layout(batch, embeddings);
  if (margin < 0.0) throw input_error("margin must be >= 0");
  const auto pentaplets = mine_batch(batch, pairwise_distances(embeddings));
  return hinge_over_pentaplets(pentaplets, embeddings, margin, /*cross=*/false);
}

LossOutput hard_cross_triplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                   double margin) {
  check_layout(batch, embeddings);
  if (margin < 0.0) throw input_error("margin must be >= 0");
  const auto pentaplets = mine_batch(batch, pairwise_distances(embeddings));
  return hinge_over_pentaplets(pentaplets, embeddings, margin, /*cross=*/true);
}

PentapletLossOutput hard_pentaplet_loss(const CmBatch& batch, const Matrix& embeddings,
                                        const LossConfig& config) {
  check_layout(batch, embeddings);
  config.validate();
  const double scale = 1.0 / static_cast<double>(batch.spec.batch_size());

  PentapletLossOutput out;
  out.pentaplets = mine_batch(batch, pairwise_distances(embeddings));
  LossOutput global =
      hinge_over_pentaplets(out.pentaplets, embeddings, config.margin, /*cross=*/false);
  LossOutput cross = hinge_over_pentaplets(out.pentaplets, embeddings,
                                           config.effective_cross_margin(), /*cross=*/true);

  out.global_value = global.value;
  out.cross_value = cross.value;
  out.value = (global.value + cross.value) * scale;
  out.active_count = global.active_count + cross.active_count;
  out.grad = Matrix(embeddings.rows(), embeddings.cols(), 0.0);
  for (std::size_t i = 0; i < out.grad.count(); ++i) {
    out.grad.data()[i] = (global.grad.data()[i] + cross.grad.data()[i]) * scale;
  }
  return out;
}

Matrix ClassifierHead::forward(const Matrix& embeddings) const {
  if (embeddings.cols() != dim()) {
    throw input_error("embedding dim " + std::to_string(embeddings.cols()) +
                      " does not match head dim " + std::to_string(dim()));
  }
  Matrix logits(embeddings.rows(), num_classes());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    for (std::size_t j = 0; j < num_classes(); ++j) {
      double s = bias[j];
      for (std::size_t k = 0; k < dim(); ++k) s += weight(j, k) * embeddings(i, k);
      logits(i, j) = s;
    }
  }
  return logits;
}

LossOutput identity_loss(const Matrix& logits, std::span<const std::uint32_t> labels) {
  if (logits.rows() == 0 || logits.cols() < 2) {
    throw input_error("logits must be n x T with T >= 2");
  }
  if (!logits.all_finite()) throw input_error("non-finite logit");
  if (labels.size() != logits.rows()) throw input_error("label count does not match logits");
  const std::size_t n = logits.rows();
  const std::size_t t = logits.cols();
  for (std::uint32_t y : labels) {
    if (y >= t) {
      throw input_error("label " + std::to_string(y) + " out of range for " + std::to_string(t) +
                        " classes");
    }
  }
  LossOutput out;
  out.grad = Matrix(n, t, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> probs(t);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logits.row(i);
    const double row_max = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      probs[j] = std::exp(row[j] - row_max);
      denom += probs[j];
    }
    // -log softmax(f)[y] = log(sum exp(f - max)) - (f_y - max)
    out.value += (std::log(denom) - (row[labels[i]] - row_max)) * inv_n;
    for (std::size_t j = 0; j < t; ++j) {
      const double p = probs[j] / denom;
      out.grad(i, j) = (p - (j == labels[i] ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.active_count = n;
  return out;
}

HpiLossOutput hpi_loss(const CmBatch& batch, const Matrix& embeddings, const Matrix& logits,
                       std::span<const std::uint32_t> labels, const LossConfig& config) {
  config.validate();
  PentapletLossOutput hp = hard_pentaplet_loss(batch, embeddings, config);
  LossOutput id = identity_loss(logits, labels);

  HpiLossOutput out;
  out.pentaplet_value = hp.value;
  out.identity_value = id.value;
  out.value = hp.value + config.identity_weight * id.value;
  out.grad_embeddings = std::move(hp.grad);
  out.grad_logits = Matrix(logits.rows(), logits.cols(), 0.0);
  for (std::size_t i = 0; i < out.grad_logits.count(); ++i) {
    out.grad_logits.data()[i] = config.identity_weight * id.grad.data()[i];
  }
  out.active_count = hp.active_count;
  return out;
}

}  // namespace hpiln
