#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

/// Row-major dense matrix. Vectors are 1×d or n×1 matrices.
template <typename T>
class DenseMatrix {
 public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeError("dense matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  DenseMatrix<U> cast() const {
    DenseMatrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
std::string shape_string(const DenseMatrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// Coordinate entries sorted by (row, col) with a CSR row index on top.
template <typename T>
class SparseMatrix {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t col;
    T value;
  };

  SparseMatrix() = default;

  /// Sorts the entries and sums duplicates.
  static SparseMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
    for (const auto& e : entries) {
      if (e.row >= rows || e.col >= cols)
        throw ShapeError("sparse entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                         ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
      if (!std::isfinite(e.value)) throw NumericalError("non-finite sparse entry");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Entry> merged;
    merged.reserve(entries.size());
    for (const auto& e : entries) {
      if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
        merged.back().value += e.value;
      else
        merged.push_back(e);
    }
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.entries_ = std::move(merged);
    m.row_ptr_.assign(rows + 1, 0);
    for (const auto& e : m.entries_) ++m.row_ptr_[e.row + 1];
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Entry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), T{1}});
    return from_entries(n, n, std::move(entries));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  std::span<const Entry> row(std::size_t r) const {
    return {entries_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  /// Value at (r, c), zero when absent.
  T at(std::size_t r, std::size_t c) const {
    for (const auto& e : row(r))
      if (e.col == c) return e.value;
    return T{0};
  }

  DenseMatrix<T> to_dense() const {
    DenseMatrix<T> d(rows_, cols_);
    for (const auto& e : entries_) d(e.row, e.col) = e.value;
    return d;
  }

  template <typename U>
  SparseMatrix<U> cast() const {
    std::vector<typename SparseMatrix<U>::Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.row, e.col, static_cast<U>(e.value)});
    return SparseMatrix<U>::from_entries(rows_, cols_, std::move(out));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_ptr_{0};
};

// ---- kernels ---------------------------------------------------------------

/// a · b for sparse a.
template <typename T>
DenseMatrix<T> spmm(const SparseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("spmm: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + shape_string(b));
  DenseMatrix<T> out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    for (const auto& e : a.row(r)) {
      const auto src = b.row(e.col);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += e.value * src[c];
    }
  }
  return out;
}

/// aᵀ · b for sparse a.
template <typename T>
DenseMatrix<T> spmm_transposed(const SparseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.rows() != b.rows()) throw ShapeError("spmm_transposed: row mismatch");
  DenseMatrix<T> out(a.cols(), b.cols());
  for (const auto& e : a.entries()) {
    auto dst = out.row(e.col);
    const auto src = b.row(e.row);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += e.value * src[c];
  }
  return out;
}

template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_string(a) + " times " + shape_string(b));
  DenseMatrix<T> out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{0}) continue;
      const T* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

/// aᵀ · b.
template <typename T>
DenseMatrix<T> matmul_tn(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_string(a) + "ᵀ times " + shape_string(b));
  DenseMatrix<T> out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const T* src = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T aki = a(k, i);
      if (aki == T{0}) continue;
      T* dst = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aki * src[j];
    }
  }
  return out;
}

/// a · bᵀ.
template <typename T>
DenseMatrix<T> matmul_nt(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_string(a) + " times " + shape_string(b) + "ᵀ");
  DenseMatrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      T acc{0};
      for (std::size_t k = 0; k < ai.size(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

/// ‖x − y‖₁ over two equally sized rows.
template <typename T>
T l1_distance(std::span<const T> x, std::span<const T> y) {
  T acc{0};
  for (std::size_t c = 0; c < x.size(); ++c) acc += std::abs(x[c] - y[c]);
  return acc;
}

}  // namespace kgalign
