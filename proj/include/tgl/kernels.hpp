#pragma once

#include "tgl/matrix.hpp"

namespace tgl::kernels {

// Worker count used by the omp kernels. 1 means fully serial execution.
// Parallelism is always across output rows with a fixed inner loop order,
// so results are bitwise identical for every thread count.
int threads();
void set_threads(int n);

namespace serial {

// out = op_a(a) * op_b(b) where op is optional transposition.
void matmul(const Matrix& a, const Matrix& b, Matrix& out,
            bool trans_a = false, bool trans_b = false);

// out = s * x for CSR s and dense x.
void spmm(const Csr& s, const Matrix& x, Matrix& out);

// out(i, j) = squared euclidean distance between rows i and j of pts.
void pairwise_sqdist(const Matrix& pts, Matrix& out);

}  // namespace serial

namespace omp {

void matmul(const Matrix& a, const Matrix& b, Matrix& out,
            bool trans_a = false, bool trans_b = false);
void spmm(const Csr& s, const Matrix& x, Matrix& out);
void pairwise_sqdist(const Matrix& pts, Matrix& out);

}  // namespace omp

// Dispatching entry points used by the rest of the library. They run the
// omp kernels when threads() > 1 and the serial reference otherwise.
void matmul(const Matrix& a, const Matrix& b, Matrix& out,
            bool trans_a = false, bool trans_b = false);
void spmm(const Csr& s, const Matrix& x, Matrix& out);
void pairwise_sqdist(const Matrix& pts, Matrix& out);

inline Matrix matmul(const Matrix& a, const Matrix& b, bool trans_a = false,
                     bool trans_b = false) {
  Matrix out;
  matmul(a, b, out, trans_a, trans_b);
  return out;
}

inline Matrix spmm(const Csr& s, const Matrix& x) {
  Matrix out;
  spmm(s, x, out);
  return out;
}

inline Matrix pairwise_sqdist(const Matrix& pts) {
  Matrix out;
  pairwise_sqdist(pts, out);
  return out;
}

}  // namespace tgl::kernels
