#ifndef HPILN_CORE_HPP_
#define HPILN_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpiln {

// Raised when caller-provided values violate an operation's preconditions.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a dataset or file cannot satisfy an operation (too few
// identities, malformed file, missing camera coverage, ...).
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation produces non-finite values.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Modality : std::uint8_t { Rgb = 0, Ir = 1 };

inline Modality opposite(Modality m) {
  return m == Modality::Rgb ? Modality::Ir : Modality::Rgb;
}

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

// One sample: identity label, modality, camera id, d-dimensional feature.
struct EmbeddingRecord {
  std::uint32_t identity = 0;
  Modality modality = Modality::Rgb;
  std::uint8_t camera = 1;
  std::vector<double> vec;
};

// Ordered list of records with a declared feature dimension. Record order is
// stable: the index of a record identifies the sample within a run.
struct EmbeddingDataset {
  std::size_t dim = 0;
  std::vector<EmbeddingRecord> records;

  std::size_t size() const { return records.size(); }
  void validate() const;  // throws input_error on violated invariants
};

// Dense row-major matrix of doubles. Small on purpose; every reduction in the
// project iterates in a fixed order so runs stay bit-reproducible.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::size_t count() const { return data_.size(); }

  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Symmetric n x n Euclidean distance matrix with zero diagonal.
struct DistanceMatrix {
  std::size_t n = 0;
  Matrix values;

  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

// Stacks equally sized vectors into a matrix. Throws input_error on a length
// mismatch or a non-finite component.
Matrix to_matrix(const std::vector<std::vector<double>>& vectors);

// Rows of `dataset` records selected by `indices`, in order.
Matrix gather_vectors(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

// All record vectors of `dataset` as an n x d matrix.
Matrix dataset_matrix(const EmbeddingDataset& dataset);

}  // namespace hpiln

#endif  // HPILN_CORE_HPP_
