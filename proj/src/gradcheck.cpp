#include "hpiln/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "hpiln/distance.hpp"
#include "hpiln/losses.hpp"
#include "hpiln/mining.hpp"
#include "hpiln/rng.hpp"
#include "hpiln/trainer.hpp"

namespace hpiln {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTieGap = 1e-3;  // margin keeping selections stable under kStep bumps

double rel_error(double analytic, double fd) {
  const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-4});
  return std::abs(analytic - fd) / denom;
}

// Central-difference sweep over `coords` doubles, comparing against
// `analytic`; `f` re-evaluates the objective after in-place bumps.
void fd_sweep(double* coords, std::size_t count, const double* analytic,
              const std::function<double()>& f, GradCheckResult& result) {
  for (std::size_t i = 0; i < count; ++i) {
    const double saved = coords[i];
    coords[i] = saved + kStep;
    const double fp = f();
    coords[i] = saved - kStep;
    const double fm = f();
    coords[i] = saved;
    const double fd = (fp - fm) / (2.0 * kStep);
    result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic[i], fd));
    ++result.coordinates;
  }
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.count(); ++i) m.data()[i] = rng.normal();
  return m;
}

// No mining selection within kTieGap of switching, no hinge within kTieGap
// of its kink, no two points within kTieGap of coinciding.
bool pentaplet_tie_free(const CmBatch& batch, const Matrix& embeddings, double margin,
                        double cross_margin) {
  const DistanceMatrix dmat = pairwise_distances(embeddings);
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dmat(i, j) < kTieGap) return false;
    }
  }
  const auto pentaplets = mine_batch(batch, dmat);
  for (const auto& p : pentaplets) {
    const std::size_t a = p.anchor;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const bool same_block = batch.block_of(j) == batch.block_of(a);
      const bool opposite = batch.is_rgb_slot(j) != batch.is_rgb_slot(a);
      if (same_block && j != p.global_pos && p.d_global_pos - dmat(a, j) < kTieGap) return false;
      if (!same_block && j != p.global_neg && dmat(a, j) - p.d_global_neg < kTieGap) return false;
      if (same_block && opposite && j != p.cross_pos && p.d_cross_pos - dmat(a, j) < kTieGap) {
        return false;
      }
      if (!same_block && opposite && j != p.cross_neg && dmat(a, j) - p.d_cross_neg < kTieGap) {
        return false;
      }
    }
    if (std::abs(margin + p.d_global_pos - p.d_global_neg) < kTieGap) return false;
    if (std::abs(cross_margin + p.d_cross_pos - p.d_cross_neg) < kTieGap) return false;
  }
  return true;
}

// Hard triplet: hardest positive ranges over the anchor's own label including
// the anchor itself, hardest negative over every other label.
bool hard_triplet_tie_free(const Matrix& embeddings, const std::vector<std::uint32_t>& labels,
                           double margin) {
  const DistanceMatrix dmat = pairwise_distances(embeddings);
  const std::size_t n = embeddings.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dmat(i, j) < kTieGap) return false;
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    double best_pos = 0.0;
    double best_neg = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == labels[a]) {
        best_pos = std::max(best_pos, dmat(a, j));
      } else {
        best_neg = std::min(best_neg, dmat(a, j));
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (dmat(a, j) != best_pos && best_pos - dmat(a, j) < kTieGap) return false;
      } else {
        if (dmat(a, j) != best_neg && dmat(a, j) - best_neg < kTieGap) return false;
      }
    }
    if (std::abs(margin + best_pos - best_neg) < kTieGap) return false;
  }
  return true;
}

template <typename Generate>
Matrix draw_until(Rng& rng, const Generate& generate) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto [m, ok] = generate(rng);
    if (ok) return m;
  }
  throw numeric_error("gradcheck could not draw a tie-free instance");
}

void check_triplet(Rng& rng, GradCheckResult& result) {
  const std::size_t n = 6 + rng.uniform_int(5);
  const std::size_t d = 2 + rng.uniform_int(4);
  const double margin = 0.3;
  std::vector<IndexTriplet> triplets;
  Matrix emb = draw_until(rng, [&](Rng& r) {
    Matrix m = random_matrix(n, d, r);
    triplets.clear();
    for (int t = 0; t < 5; ++t) {
      IndexTriplet tr;
      tr.anchor = r.uniform_int(n);
      do { tr.positive = r.uniform_int(n); } while (tr.positive == tr.anchor);
      do {
        tr.negative = r.uniform_int(n);
      } while (tr.negative == tr.anchor || tr.negative == tr.positive);
      triplets.push_back(tr);
    }
    bool ok = true;
    for (const auto& tr : triplets) {
      const double gap = squared_distance(m.row(tr.anchor), m.row(tr.positive)) -
                         squared_distance(m.row(tr.anchor), m.row(tr.negative)) + margin;
      if (std::abs(gap) < kTieGap) ok = false;
    }
    return std::make_pair(std::move(m), ok);
  });
  const auto out = triplet_loss(emb, triplets, margin);
  fd_sweep(emb.data(), emb.count(), out.grad.data(),
           [&] { return triplet_loss(emb, triplets, margin).value; }, result);
}

void check_hard_triplet(Rng& rng, GradCheckResult& result) {
  const std::size_t p = 2 + rng.uniform_int(3);
  const std::size_t k = 1 + rng.uniform_int(3);
  const std::size_t d = 2 + rng.uniform_int(4);
  const double margin = 0.3;
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < 2 * k; ++j) labels.push_back(static_cast<std::uint32_t>(i));
  }
  Matrix emb = draw_until(rng, [&](Rng& r) {
    Matrix m = random_matrix(labels.size(), d, r);
    const bool ok = hard_triplet_tie_free(m, labels, margin);
    return std::make_pair(std::move(m), ok);
  });
  const auto out = hard_triplet_loss(emb, labels, margin);
  fd_sweep(emb.data(), emb.count(), out.grad.data(),
           [&] { return hard_triplet_loss(emb, labels, margin).value; }, result);
}

struct PentapletInstance {
  CmBatch batch;
  Matrix embeddings;
  LossConfig config;
};

PentapletInstance draw_pentaplet_instance(Rng& rng) {
  PentapletInstance inst;
  const std::size_t p = 2 + rng.uniform_int(3);
  const std::size_t k = 1 + rng.uniform_int(3);
  const std::size_t d = 2 + rng.uniform_int(4);
  inst.batch = make_layout_batch(p, k);
  inst.config.margin = 0.3;
  inst.embeddings = draw_until(rng, [&](Rng& r) {
    Matrix m = random_matrix(inst.batch.size(), d, r);
    const bool ok = pentaplet_tie_free(inst.batch, m, inst.config.margin,
                                       inst.config.effective_cross_margin());
    return std::make_pair(std::move(m), ok);
  });
  return inst;
}

void check_hard_global(Rng& rng, GradCheckResult& result) {
  auto inst = draw_pentaplet_instance(rng);
  const auto out = hard_global_triplet_loss(inst.batch, inst.embeddings, inst.config.margin);
  fd_sweep(inst.embeddings.data(), inst.embeddings.count(), out.grad.data(),
           [&] {
             return hard_global_triplet_loss(inst.batch, inst.embeddings, inst.config.margin)
                 .value;
           },
           result);
}

void check_hard_cross(Rng& rng, GradCheckResult& result) {
  auto inst = draw_pentaplet_instance(rng);
  const auto out = hard_cross_triplet_loss(inst.batch, inst.embeddings, inst.config.margin);
  fd_sweep(inst.embeddings.data(), inst.embeddings.count(), out.grad.data(),
           [&] {
             return hard_cross_triplet_loss(inst.batch, inst.embeddings, inst.config.margin)
                 .value;
           },
           result);
}

void check_hard_pentaplet(Rng& rng, GradCheckResult& result) {
  auto inst = draw_pentaplet_instance(rng);
  const auto out = hard_pentaplet_loss(inst.batch, inst.embeddings, inst.config);
  fd_sweep(inst.embeddings.data(), inst.embeddings.count(), out.grad.data(),
           [&] { return hard_pentaplet_loss(inst.batch, inst.embeddings, inst.config).value; },
           result);
}

void check_identity(Rng& rng, GradCheckResult& result) {
  const std::size_t n = 4 + rng.uniform_int(6);
  const std::size_t t = 2 + rng.uniform_int(4);
  Matrix logits = random_matrix(n, t, rng);
  std::vector<std::uint32_t> labels(n);
  for (auto& label : labels) label = static_cast<std::uint32_t>(rng.uniform_int(t));
  const auto out = identity_loss(logits, labels);
  fd_sweep(logits.data(), logits.count(), out.grad.data(),
           [&] { return identity_loss(logits, labels).value; }, result);
}

void check_hpi(Rng& rng, GradCheckResult& result) {
  auto inst = draw_pentaplet_instance(rng);
  const std::size_t p = inst.batch.spec.num_identities;
  Matrix logits = random_matrix(inst.batch.size(), p, rng);
  std::vector<std::uint32_t> labels(inst.batch.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<std::uint32_t>(inst.batch.block_of(i));
  }
  const auto out = hpi_loss(inst.batch, inst.embeddings, logits, labels, inst.config);
  const auto value = [&] {
    return hpi_loss(inst.batch, inst.embeddings, logits, labels, inst.config).value;
  };
  fd_sweep(inst.embeddings.data(), inst.embeddings.count(), out.grad_embeddings.data(), value,
           result);
  fd_sweep(logits.data(), logits.count(), out.grad_logits.data(), value, result);
}

void check_model(Rng& rng, GradCheckResult& result) {
  const std::size_t p = 2 + rng.uniform_int(2);
  const std::size_t k = 1 + rng.uniform_int(2);
  const CmBatch batch = make_layout_batch(p, k);
  LossConfig config;
  config.margin = 0.3;
  std::vector<std::uint32_t> labels(batch.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<std::uint32_t>(batch.block_of(i));
  }

  Trainable trainable;
  Matrix inputs;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= 1000) throw numeric_error("gradcheck could not draw a tie-free model");
    trainable.model = EmbeddingModel::create(4, 6, 3, rng);
    trainable.head.weight = random_matrix(p, 3, rng);
    trainable.head.bias.resize(p);
    for (auto& b : trainable.head.bias) b = rng.normal();
    inputs = random_matrix(batch.size(), 4, rng);
    // Scale inputs up so pre-activations and mined margins clear the gap.
    for (std::size_t i = 0; i < inputs.count(); ++i) inputs.data()[i] *= 3.0;

    const auto cache = trainable.model.forward_cached(inputs);
    bool ok = true;
    for (std::size_t i = 0; ok && i < cache.hidden_pre.count(); ++i) {
      if (std::abs(cache.hidden_pre.data()[i]) < kTieGap) ok = false;
    }
    if (ok) {
      ok = pentaplet_tie_free(batch, cache.outputs, config.margin,
                              config.effective_cross_margin());
    }
    if (ok) break;
  }

  const auto eval =
      evaluate_training_loss(trainable, inputs, batch, labels, LossKind::Hpi, config);
  const auto value = [&] {
    return evaluate_training_loss(trainable, inputs, batch, labels, LossKind::Hpi, config).loss;
  };
  auto views = parameter_views(trainable);
  std::size_t offset = 0;
  for (const auto& view : views) {
    fd_sweep(view.data(), view.size(), eval.param_grads.data() + offset, value, result);
    offset += view.size();
  }
}

}  // namespace

GradTarget grad_target_from_string(const std::string& name) {
  if (name == "trip") return GradTarget::Triplet;
  if (name == "htrip") return GradTarget::HardTriplet;
  if (name == "hgt") return GradTarget::HardGlobal;
  if (name == "hct") return GradTarget::HardCross;
  if (name == "hp") return GradTarget::HardPentaplet;
  if (name == "id") return GradTarget::Identity;
  if (name == "hpi") return GradTarget::Hpi;
  if (name == "model") return GradTarget::Model;
  throw input_error("unknown gradcheck target '" + name +
                    "' (expected trip|htrip|hgt|hct|hp|id|hpi|model)");
}

std::string to_string(GradTarget target) {
  switch (target) {
    case GradTarget::Triplet: return "trip";
    case GradTarget::HardTriplet: return "htrip";
    case GradTarget::HardGlobal: return "hgt";
    case GradTarget::HardCross: return "hct";
    case GradTarget::HardPentaplet: return "hp";
    case GradTarget::Identity: return "id";
    case GradTarget::Hpi: return "hpi";
    case GradTarget::Model: return "model";
  }
  throw input_error("bad gradcheck target");
}

double grad_target_tolerance(GradTarget target) {
  return target == GradTarget::Model ? 1e-4 : 1e-5;
}

GradCheckResult run_gradcheck(GradTarget target, std::size_t instances, std::uint64_t seed) {
  if (instances < 1) throw input_error("gradcheck needs at least 1 instance");
  GradCheckResult result;
  result.instances = instances;
  Rng rng(Rng::derive(seed, "gradcheck-" + to_string(target)));
  for (std::size_t i = 0; i < instances; ++i) {
    switch (target) {
      case GradTarget::Triplet: check_triplet(rng, result); break;
      case GradTarget::HardTriplet: check_hard_triplet(rng, result); break;
      case GradTarget::HardGlobal: check_hard_global(rng, result); break;
      case GradTarget::HardCross: check_hard_cross(rng, result); break;
      case GradTarget::HardPentaplet: check_hard_pentaplet(rng, result); break;
      case GradTarget::Identity: check_identity(rng, result); break;
      case GradTarget::Hpi: check_hpi(rng, result); break;
      case GradTarget::Model: check_model(rng, result); break;
    }
  }
  return result;
}

}  // namespace hpiln
