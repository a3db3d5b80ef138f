// _hpiln: python bindings over the core operations (distances, mining,
// losses, synthetic data, training, evaluation). Dense data crosses the
// boundary as numpy arrays.
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hpiln/core.hpp"
#include "hpiln/distance.hpp"
#include "hpiln/eval.hpp"
#include "hpiln/losses.hpp"
#include "hpiln/mining.hpp"
#include "hpiln/rng.hpp"
#include "hpiln/sampler.hpp"
#include "hpiln/synthetic.hpp"
#include "hpiln/trainer.hpp"
#include "hpiln/version.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace hpiln;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix matrix_from(const DoubleArray& arr) {
  if (arr.ndim() != 2) throw input_error("expected a 2-D float array");
  Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
  std::memcpy(m.data(), arr.data(), m.count() * sizeof(double));
  return m;
}

py::array_t<double> array_from(const Matrix& m) {
  py::array_t<double> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data(), m.count() * sizeof(double));
  return arr;
}

EmbeddingDataset dataset_from(const DoubleArray& vectors,
                              const std::vector<std::uint32_t>& identities,
                              const std::vector<std::string>& modalities,
                              const std::vector<unsigned>& cameras) {
  const Matrix m = matrix_from(vectors);
  if (identities.size() != m.rows() || modalities.size() != m.rows() ||
      cameras.size() != m.rows()) {
    throw input_error("identities/modalities/cameras must match the vector row count");
  }
  EmbeddingDataset dataset;
  dataset.dim = m.cols();
  dataset.records.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto& rec = dataset.records[i];
    rec.identity = identities[i];
    rec.modality = modality_from_string(modalities[i]);
    if (cameras[i] > 255) throw input_error("camera id out of range");
    rec.camera = static_cast<std::uint8_t>(cameras[i]);
    rec.vec.assign(m.row(i).begin(), m.row(i).end());
  }
  dataset.validate();
  return dataset;
}

py::dict dataset_to_dict(const EmbeddingDataset& dataset) {
  Matrix m = dataset_matrix(dataset);
  std::vector<std::uint32_t> identities(dataset.size());
  std::vector<std::string> modalities(dataset.size());
  std::vector<unsigned> cameras(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    identities[i] = dataset.records[i].identity;
    modalities[i] = to_string(dataset.records[i].modality);
    cameras[i] = dataset.records[i].camera;
  }
  return py::dict("vectors"_a = array_from(m), "identities"_a = identities,
                  "modalities"_a = modalities, "cameras"_a = cameras);
}

LossConfig loss_config_from(double margin, const std::optional<double>& cross_margin,
                            double identity_weight) {
  LossConfig config;
  config.margin = margin;
  config.cross_margin = cross_margin;
  config.identity_weight = identity_weight;
  config.validate();
  return config;
}

}  // namespace

PYBIND11_MODULE(_hpiln, m) {
  m.doc() = "Cross-modality metric learning: mining, pentaplet/identity losses, evaluation";

  py::register_exception<data_error>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);

  m.def("version", [] { return std::string(kVersion); });

  m.def(
      "pairwise_distances",
      [](const DoubleArray& vectors) {
        return array_from(pairwise_distances(matrix_from(vectors)).values);
      },
      "vectors"_a, "n x n Euclidean distance matrix of the rows");

  m.def(
      "mine_batch",
      [](std::size_t p, std::size_t k, const DoubleArray& embeddings) {
        const CmBatch batch = make_layout_batch(p, k);
        const Matrix m = matrix_from(embeddings);
        const auto pentaplets = mine_batch(batch, pairwise_distances(m));
        py::list out;
        for (const auto& pt : pentaplets) {
          out.append(py::dict(
              "anchor"_a = pt.anchor, "global_pos"_a = pt.global_pos,
              "global_neg"_a = pt.global_neg, "cross_pos"_a = pt.cross_pos,
              "cross_neg"_a = pt.cross_neg, "d_global_pos"_a = pt.d_global_pos,
              "d_global_neg"_a = pt.d_global_neg, "d_cross_pos"_a = pt.d_cross_pos,
              "d_cross_neg"_a = pt.d_cross_neg));
        }
        return out;
      },
      "p"_a, "k"_a, "embeddings"_a,
      "Hardest pentaplets of a cm-batch: rows are P blocks of K RGB then K IR");

  m.def(
      "hard_pentaplet_loss",
      [](std::size_t p, std::size_t k, const DoubleArray& embeddings, double margin,
         const std::optional<double>& cross_margin) {
        const CmBatch batch = make_layout_batch(p, k);
        const auto out =
            hard_pentaplet_loss(batch, matrix_from(embeddings),
                                loss_config_from(margin, cross_margin, 1.0));
        return py::dict("value"_a = out.value, "global_value"_a = out.global_value,
                        "cross_value"_a = out.cross_value, "grad"_a = array_from(out.grad),
                        "active_count"_a = out.active_count);
      },
      "p"_a, "k"_a, "embeddings"_a, "margin"_a = 0.3, "cross_margin"_a = std::nullopt);

  m.def(
      "identity_loss",
      [](const DoubleArray& logits, const std::vector<std::uint32_t>& labels) {
        const auto out = identity_loss(matrix_from(logits), labels);
        return py::dict("value"_a = out.value, "grad"_a = array_from(out.grad));
      },
      "logits"_a, "labels"_a);

  m.def(
      "hpi_loss",
      [](std::size_t p, std::size_t k, const DoubleArray& embeddings, const DoubleArray& logits,
         const std::vector<std::uint32_t>& labels, double margin,
         const std::optional<double>& cross_margin, double identity_weight) {
        const CmBatch batch = make_layout_batch(p, k);
        const auto out =
            hpi_loss(batch, matrix_from(embeddings), matrix_from(logits), labels,
                     loss_config_from(margin, cross_margin, identity_weight));
        return py::dict("value"_a = out.value, "pentaplet_value"_a = out.pentaplet_value,
                        "identity_value"_a = out.identity_value,
                        "grad_embeddings"_a = array_from(out.grad_embeddings),
                        "grad_logits"_a = array_from(out.grad_logits),
                        "active_count"_a = out.active_count);
      },
      "p"_a, "k"_a, "embeddings"_a, "logits"_a, "labels"_a, "margin"_a = 0.3,
      "cross_margin"_a = std::nullopt, "identity_weight"_a = 1.0);

  m.def(
      "generate_synthetic",
      [](std::size_t num_identities, std::size_t samples, std::size_t dim,
         double identity_spread, double modality_offset, double noise_sigma,
         std::uint64_t seed) {
        SyntheticSpec spec;
        spec.num_identities = num_identities;
        spec.samples_per_identity_per_modality = samples;
        spec.input_dim = dim;
        spec.identity_spread = identity_spread;
        spec.modality_offset = modality_offset;
        spec.noise_sigma = noise_sigma;
        spec.seed = seed;
        return dataset_to_dict(generate_synthetic(spec));
      },
      "num_identities"_a = 5, "samples"_a = 10, "dim"_a = 8, "identity_spread"_a = 3.0,
      "modality_offset"_a = 1.5, "noise_sigma"_a = 0.3, "seed"_a = 0);

  m.def(
      "train",
      [](const DoubleArray& vectors, const std::vector<std::uint32_t>& identities,
         const std::vector<std::string>& modalities, const std::vector<unsigned>& cameras,
         std::size_t p, std::size_t k, std::size_t iterations, double learning_rate,
         double margin, double identity_weight, const std::string& loss,
         std::size_t hidden_dim, std::size_t output_dim, std::uint64_t seed) {
        const EmbeddingDataset dataset = dataset_from(vectors, identities, modalities, cameras);
        TrainConfig tc;
        tc.batch.num_identities = p;
        tc.batch.images_per_modality = k;
        tc.iterations = iterations;
        tc.adam.learning_rate = learning_rate;
        tc.loss.margin = margin;
        tc.loss.identity_weight = identity_weight;
        tc.kind = loss_kind_from_string(loss);
        tc.seed = Rng::derive(seed, "train");

        Rng init_rng(Rng::derive(seed, "init"));
        Trainable trainable;
        trainable.model = EmbeddingModel::create(dataset.dim, hidden_dim, output_dim, init_rng);
        trainable.head = make_head(dataset, output_dim, init_rng);
        const TrainResult result = train(dataset, std::move(trainable), tc);

        std::vector<double> losses;
        losses.reserve(result.history.size());
        for (const auto& row : result.history) losses.push_back(row.loss);
        py::dict out = dataset_to_dict(export_embeddings(result.trained.model, dataset));
        out["loss_history"] = losses;
        return out;
      },
      "vectors"_a, "identities"_a, "modalities"_a, "cameras"_a, "p"_a = 4, "k"_a = 2,
      "iterations"_a = 2000, "learning_rate"_a = 3e-4, "margin"_a = 0.3,
      "identity_weight"_a = 1.0, "loss"_a = "hpi", "hidden_dim"_a = 16, "output_dim"_a = 2,
      "seed"_a = 0);

  m.def(
      "evaluate",
      [](const DoubleArray& vectors, const std::vector<std::uint32_t>& identities,
         const std::vector<std::string>& modalities, const std::vector<unsigned>& cameras,
         const std::string& mode, std::size_t shot, std::size_t trials, std::uint64_t seed,
         std::size_t max_rank) {
        ProtocolConfig protocol;
        protocol.mode = eval_mode_from_string(mode);
        protocol.shot = shot;
        protocol.trials = trials;
        protocol.seed = seed;
        protocol.max_rank = max_rank;
        const EvalReport report =
            evaluate(dataset_from(vectors, identities, modalities, cameras), protocol);
        py::list per_trial;
        for (const auto& t : report.per_trial) {
          per_trial.append(py::dict("rank1"_a = t.rank1, "rank10"_a = t.rank10,
                                    "rank20"_a = t.rank20, "map"_a = t.map,
                                    "probes"_a = t.probes, "skipped"_a = t.skipped,
                                    "gallery_size"_a = t.gallery_size));
        }
        return py::dict("cmc"_a = report.cmc, "rank1"_a = report.rank1,
                        "rank10"_a = report.rank10, "rank20"_a = report.rank20,
                        "map"_a = report.map, "per_trial"_a = per_trial,
                        "skipped_probes"_a = report.skipped_probes);
      },
      "vectors"_a, "identities"_a, "modalities"_a, "cameras"_a, "mode"_a = "all",
      "shot"_a = 1, "trials"_a = 10, "seed"_a = 0, "max_rank"_a = 50);
}
