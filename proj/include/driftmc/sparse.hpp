#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace driftmc {

struct Triplet {
  std::int32_t row = 0;
  std::int32_t col = 0;
  double value = 0;
};

/// Compressed-row matrix. Column indices are sorted within each row and
/// structural zeros are never stored.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Sums duplicates and drops exact zeros.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::int32_t> row_cols(std::size_t i) const;
  std::span<const double> row_values(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  double row_sum(std::size_t i) const;

  /// y = x A for a row vector x.
  std::vector<double> left_multiply(std::span<const double> x) const;
  /// y = A x.
  std::vector<double> right_multiply(std::span<const double> x) const;
  /// A B with entries below `prune` removed from the result.
  SparseMatrix multiply(const SparseMatrix& b, double prune = 1e-15) const;
  SparseMatrix transpose() const;
  /// Rows and columns restricted to `keep`, renumbered in the given order.
  SparseMatrix principal_submatrix(std::span<const std::int32_t> keep) const;

  std::vector<Triplet> triplets() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::int32_t> col_idx_;
  std::vector<double> values_;

  friend class SparseRowWriter;
};

/// Appends rows in order; each row's entries must arrive with increasing columns.
class SparseRowWriter {
 public:
  SparseRowWriter(std::size_t rows, std::size_t cols);
  void push(std::int32_t col, double value);
  void end_row();
  SparseMatrix finish() &&;

 private:
  SparseMatrix m_;
  std::size_t expected_rows_;
};

}  // namespace driftmc
