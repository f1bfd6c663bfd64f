#include "driftmc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "driftmc/parallel.hpp"

namespace driftmc {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols) : cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows || t.col < 0 ||
        static_cast<std::size_t>(t.col) >= cols)
      throw std::out_of_range("triplet index outside matrix shape");
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  SparseRowWriter w(rows, cols);
  std::size_t k = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    while (k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == i) {
      const auto col = triplets[k].col;
      double v = 0;
      for (; k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == i && triplets[k].col == col; ++k)
        v += triplets[k].value;
      if (v != 0.0) w.push(col, v);
    }
    w.end_row();
  }
  return std::move(w).finish();
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseRowWriter w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    w.push(static_cast<std::int32_t>(i), 1.0);
    w.end_row();
  }
  return std::move(w).finish();
}

std::span<const std::int32_t> SparseMatrix::row_cols(std::size_t i) const {
  return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const double> SparseMatrix::row_values(std::size_t i) const {
  return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto c = row_cols(i);
  auto it = std::lower_bound(c.begin(), c.end(), static_cast<std::int32_t>(j));
  if (it == c.end() || *it != static_cast<std::int32_t>(j)) return 0.0;
  return values_[row_ptr_[i] + static_cast<std::size_t>(it - c.begin())];
}

double SparseMatrix::row_sum(std::size_t i) const {
  double s = 0;
  for (double v : row_values(i)) s += v;
  return s;
}

std::vector<double> SparseMatrix::left_multiply(std::span<const double> x) const {
  if (x.size() != rows()) throw std::invalid_argument("left_multiply: length mismatch");
  std::vector<double> y(cols_, 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[static_cast<std::size_t>(col_idx_[k])] += xi * values_[k];
  }
  return y;
}

std::vector<double> SparseMatrix::right_multiply(std::span<const double> x) const {
  if (x.size() != cols_) throw std::invalid_argument("right_multiply: length mismatch");
  std::vector<double> y(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    double s = 0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[static_cast<std::size_t>(col_idx_[k])];
    y[i] = s;
  }
  return y;
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& b, double prune) const {
  if (cols_ != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  const std::size_t n = rows();
  // Rows are computed independently into per-block buffers and stitched in order.
  const std::size_t block = 256;
  const std::size_t n_blocks = (n + block - 1) / block;
  struct Block {
    std::vector<std::size_t> lengths;
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
  };
  std::vector<Block> blocks(n_blocks);
  parallel_for(n_blocks, [&](std::size_t bi) {
    std::vector<double> acc(b.cols(), 0.0);
    std::vector<char> touched(b.cols(), 0);
    std::vector<std::int32_t> pattern;
    auto& out = blocks[bi];
    for (std::size_t i = bi * block; i < std::min(n, (bi + 1) * block); ++i) {
      pattern.clear();
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const double a = values_[k];
        const auto r = static_cast<std::size_t>(col_idx_[k]);
        for (std::size_t q = b.row_ptr_[r]; q < b.row_ptr_[r + 1]; ++q) {
          const auto c = b.col_idx_[q];
          if (!touched[static_cast<std::size_t>(c)]) {
            touched[static_cast<std::size_t>(c)] = 1;
            pattern.push_back(c);
          }
          acc[static_cast<std::size_t>(c)] += a * b.values_[q];
        }
      }
      std::sort(pattern.begin(), pattern.end());
      std::size_t len = 0;
      for (auto c : pattern) {
        const double v = acc[static_cast<std::size_t>(c)];
        if (std::abs(v) >= prune && v != 0.0) {
          out.cols.push_back(c);
          out.vals.push_back(v);
          ++len;
        }
        acc[static_cast<std::size_t>(c)] = 0.0;
        touched[static_cast<std::size_t>(c)] = 0;
      }
      out.lengths.push_back(len);
    }
  });
  SparseMatrix m(n, b.cols());
  std::size_t row = 0;
  for (auto& bl : blocks) {
    for (auto len : bl.lengths) {
      m.row_ptr_[row + 1] = m.row_ptr_[row] + len;
      ++row;
    }
    m.col_idx_.insert(m.col_idx_.end(), bl.cols.begin(), bl.cols.end());
    m.values_.insert(m.values_.end(), bl.vals.begin(), bl.vals.end());
  }
  return m;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(cols_, rows());
  for (auto c : col_idx_) ++t.row_ptr_[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < cols_; ++j) t.row_ptr_[j + 1] += t.row_ptr_[j];
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> fill(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const auto dst = fill[static_cast<std::size_t>(col_idx_[k])]++;
      t.col_idx_[dst] = static_cast<std::int32_t>(i);
      t.values_[dst] = values_[k];
    }
  return t;
}

SparseMatrix SparseMatrix::principal_submatrix(std::span<const std::int32_t> keep) const {
  std::vector<std::int32_t> new_index(cols_, -1);
  for (std::size_t k = 0; k < keep.size(); ++k) new_index.at(static_cast<std::size_t>(keep[k])) = static_cast<std::int32_t>(k);
  std::vector<Triplet> trip;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = static_cast<std::size_t>(keep[k]);
    const auto c = row_cols(i);
    const auto v = row_values(i);
    for (std::size_t q = 0; q < c.size(); ++q)
      if (const auto j = new_index[static_cast<std::size_t>(c[q])]; j >= 0)
        trip.push_back({static_cast<std::int32_t>(k), j, v[q]});
  }
  return from_triplets(keep.size(), keep.size(), std::move(trip));
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      out.push_back({static_cast<std::int32_t>(i), col_idx_[k], values_[k]});
  return out;
}

SparseRowWriter::SparseRowWriter(std::size_t rows, std::size_t cols) : expected_rows_(rows) {
  m_.cols_ = cols;
  m_.row_ptr_.reserve(rows + 1);
}

void SparseRowWriter::push(std::int32_t col, double value) {
  if (col < 0 || static_cast<std::size_t>(col) >= m_.cols_) throw std::out_of_range("column outside matrix");
  const auto row_start = m_.row_ptr_.back();
  if (m_.col_idx_.size() > row_start && m_.col_idx_.back() >= col)
    throw std::invalid_argument("columns must increase within a row");
  if (value == 0.0) return;
  m_.col_idx_.push_back(col);
  m_.values_.push_back(value);
}

void SparseRowWriter::end_row() { m_.row_ptr_.push_back(m_.col_idx_.size()); }

SparseMatrix SparseRowWriter::finish() && {
  if (m_.row_ptr_.size() != expected_rows_ + 1) throw std::logic_error("SparseRowWriter: wrong row count");
  return std::move(m_);
}

}  // namespace driftmc
