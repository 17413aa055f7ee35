#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "tgl/errors.hpp"

namespace tgl {

// Dense row-major matrix of doubles. All numeric state in the project flows
// through this type; 64-bit precision throughout is a correctness
// requirement, not an optimization knob.
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
              fill) {
    if (rows < 0 || cols < 0)
      fail(Errc::dimension_mismatch, "negative matrix dimension");
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c)
        fail(Errc::dimension_mismatch, "ragged initializer rows");
      int j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double* row_ptr(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row_ptr(int i) const {
    return data_.data() + static_cast<std::size_t>(i) * cols_;
  }

  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Compressed sparse row adjacency with edge weights. `symmetric` is a
// promise made at construction time and checked by consumers that rely on
// S = S^T (spectral operators backpropagate through spmm as S itself).
struct Csr {
  int rows = 0;
  int cols = 0;
  std::vector<int> indptr;   // size rows + 1
  std::vector<int> indices;  // column ids, ascending within each row
  std::vector<double> values;
  bool symmetric = false;

  int nnz() const { return static_cast<int>(indices.size()); }
};

// Builds CSR from (row, col, value) triplets. Triplets may arrive in any
// order; duplicates are rejected because every call site in this codebase
// constructs simple graphs.
Csr csr_from_triplets(int rows, int cols,
                      std::vector<std::tuple<int, int, double>> triplets,
                      bool mark_symmetric = false);

Matrix csr_to_dense(const Csr& s);

}  // namespace tgl
