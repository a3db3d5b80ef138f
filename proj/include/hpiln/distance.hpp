#ifndef HPILN_DISTANCE_HPP_
#define HPILN_DISTANCE_HPP_

#include <span>
#include <utility>
#include <vector>

#include "hpiln/core.hpp"

namespace hpiln {

// Below this distance two points are treated as coincident and the distance
// gradient is defined as zero.
inline constexpr double kDistanceGradientEpsilon = 1e-12;

// Euclidean distance between two equal-length vectors.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Squared Euclidean distance (no sqrt), clamped at zero.
double squared_distance(std::span<const double> a, std::span<const double> b);

// n x n matrix of Euclidean distances between the rows of `vectors`. Only the
// upper triangle is computed and mirrored, so the result is exactly symmetric.
DistanceMatrix pairwise_distances(const Matrix& vectors);
DistanceMatrix pairwise_distances(const std::vector<std::vector<double>>& vectors);

// Rectangular distance matrix between rows of `a` and rows of `b`.
Matrix cross_distances(const Matrix& a, const Matrix& b);

// Gradient of d(a, b) with respect to a and b: ((a-b)/d, (b-a)/d). Returns
// zero vectors when d <= kDistanceGradientEpsilon.
std::pair<std::vector<double>, std::vector<double>> distance_gradient(
    std::span<const double> a, std::span<const double> b);

}  // namespace hpiln

#endif  // HPILN_DISTANCE_HPP_
