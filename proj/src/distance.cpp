#include "hpiln/distance.hpp"

#include <cmath>
#include <string>

namespace hpiln {

namespace {

void check_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw input_error("vector dimensions differ: " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  }
}

void check_finite_rows(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw input_error("need at least one non-empty vector");
  if (!m.all_finite()) throw input_error("non-finite component in input vectors");
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a, b);
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  // Clamp: round-off must not push the sum below zero before the sqrt.
  return sum < 0.0 ? 0.0 : sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

DistanceMatrix pairwise_distances(const Matrix& vectors) {
  check_finite_rows(vectors);
  const std::size_t n = vectors.rows();
  DistanceMatrix dmat{n, Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(vectors.row(i), vectors.row(j));
      dmat.values(i, j) = d;
      dmat.values(j, i) = d;
    }
  }
  return dmat;
}

DistanceMatrix pairwise_distances(const std::vector<std::vector<double>>& vectors) {
  return pairwise_distances(to_matrix(vectors));
}

Matrix cross_distances(const Matrix& a, const Matrix& b) {
  check_finite_rows(a);
  check_finite_rows(b);
  if (a.cols() != b.cols()) {
    throw input_error("row dimensions differ: " + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = euclidean_distance(a.row(i), b.row(j));
    }
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> distance_gradient(
    std::span<const double> a, std::span<const double> b) {
  check_same_dim(a, b);
  std::vector<double> ga(a.size(), 0.0);
  std::vector<double> gb(a.size(), 0.0);
  const double d = euclidean_distance(a, b);
  if (d > kDistanceGradientEpsilon) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      ga[k] = (a[k] - b[k]) / d;
      gb[k] = -ga[k];
    }
  }
  return {std::move(ga), std::move(gb)};
}

}  // namespace hpiln
