#include "tgl/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tgl::kernels {

namespace {

std::atomic<int> g_threads{1};

void check_matmul_shapes(const Matrix& a, const Matrix& b, Matrix& out,
                         bool trans_a, bool trans_b, int& m, int& k, int& n) {
  m = trans_a ? a.cols() : a.rows();
  k = trans_a ? a.rows() : a.cols();
  int kb = trans_b ? b.cols() : b.rows();
  n = trans_b ? b.rows() : b.cols();
  if (k != kb) fail(Errc::shape_mismatch, "matmul inner dimensions differ");
  if (out.rows() != m || out.cols() != n) out = Matrix(m, n);
}

// One output row of the product. The accumulation order within a row is
// fixed (j ascending), which is what makes the omp variant bit-identical
// to the serial one: threads only split whole rows.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i,
                       int k, int n, bool trans_a, bool trans_b) {
  double* orow = out.row_ptr(i);
  for (int c = 0; c < n; ++c) orow[c] = 0.0;
  if (!trans_a && !trans_b) {
    const double* arow = a.row_ptr(i);
    for (int j = 0; j < k; ++j) {
      double av = arow[j];
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(j);
      for (int c = 0; c < n; ++c) orow[c] += av * brow[c];
    }
  } else if (!trans_a && trans_b) {
    const double* arow = a.row_ptr(i);
    for (int c = 0; c < n; ++c) {
      const double* brow = b.row_ptr(c);
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += arow[j] * brow[j];
      orow[c] = acc;
    }
  } else if (trans_a && !trans_b) {
    for (int j = 0; j < k; ++j) {
      double av = a(j, i);
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(j);
      for (int c = 0; c < n; ++c) orow[c] += av * brow[c];
    }
  } else {
    for (int c = 0; c < n; ++c) {
      const double* brow = b.row_ptr(c);
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += a(j, i) * brow[j];
      orow[c] = acc;
    }
  }
}

inline void spmm_row(const Csr& s, const Matrix& x, Matrix& out, int i) {
  double* orow = out.row_ptr(i);
  for (int c = 0; c < x.cols(); ++c) orow[c] = 0.0;
  for (int k = s.indptr[i]; k < s.indptr[i + 1]; ++k) {
    double v = s.values[k];
    const double* xrow = x.row_ptr(s.indices[k]);
    for (int c = 0; c < x.cols(); ++c) orow[c] += v * xrow[c];
  }
}

inline void sqdist_row(const Matrix& pts, Matrix& out, int i) {
  int n = pts.rows();
  int d = pts.cols();
  const double* pi = pts.row_ptr(i);
  double* orow = out.row_ptr(i);
  for (int j = 0; j < n; ++j) {
    const double* pj = pts.row_ptr(j);
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
      double diff = pi[c] - pj[c];
      acc += diff * diff;
    }
    orow[j] = acc;
  }
}

}  // namespace

int threads() { return g_threads.load(); }

void set_threads(int n) {
  if (n < 1) fail(Errc::config_error, "thread count must be at least 1");
  g_threads.store(n);
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, bool trans_a,
            bool trans_b) {
  int m = 0, k = 0, n = 0;
  check_matmul_shapes(a, b, out, trans_a, trans_b, m, k, n);
  for (int i = 0; i < m; ++i) matmul_row(a, b, out, i, k, n, trans_a, trans_b);
}

void spmm(const Csr& s, const Matrix& x, Matrix& out) {
  if (s.cols != x.rows()) fail(Errc::shape_mismatch, "spmm inner dimensions differ");
  if (out.rows() != s.rows || out.cols() != x.cols()) out = Matrix(s.rows, x.cols());
  for (int i = 0; i < s.rows; ++i) spmm_row(s, x, out, i);
}

void pairwise_sqdist(const Matrix& pts, Matrix& out) {
  if (out.rows() != pts.rows() || out.cols() != pts.rows())
    out = Matrix(pts.rows(), pts.rows());
  for (int i = 0; i < pts.rows(); ++i) sqdist_row(pts, out, i);
}

}  // namespace serial

namespace omp {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, bool trans_a,
            bool trans_b) {
  int m = 0, k = 0, n = 0;
  check_matmul_shapes(a, b, out, trans_a, trans_b, m, k, n);
#pragma omp parallel for schedule(static) num_threads(threads())
  for (int i = 0; i < m; ++i) matmul_row(a, b, out, i, k, n, trans_a, trans_b);
}

void spmm(const Csr& s, const Matrix& x, Matrix& out) {
  if (s.cols != x.rows()) fail(Errc::shape_mismatch, "spmm inner dimensions differ");
  if (out.rows() != s.rows || out.cols() != x.cols()) out = Matrix(s.rows, x.cols());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (int i = 0; i < s.rows; ++i) spmm_row(s, x, out, i);
}

void pairwise_sqdist(const Matrix& pts, Matrix& out) {
  if (out.rows() != pts.rows() || out.cols() != pts.rows())
    out = Matrix(pts.rows(), pts.rows());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (int i = 0; i < pts.rows(); ++i) sqdist_row(pts, out, i);
}

}  // namespace omp

void matmul(const Matrix& a, const Matrix& b, Matrix& out, bool trans_a,
            bool trans_b) {
  if (threads() > 1)
    omp::matmul(a, b, out, trans_a, trans_b);
  else
    serial::matmul(a, b, out, trans_a, trans_b);
}

void spmm(const Csr& s, const Matrix& x, Matrix& out) {
  if (threads() > 1)
    omp::spmm(s, x, out);
  else
    serial::spmm(s, x, out);
}

void pairwise_sqdist(const Matrix& pts, Matrix& out) {
  if (threads() > 1)
    omp::pairwise_sqdist(pts, out);
  else
    serial::pairwise_sqdist(pts, out);
}

}  // namespace tgl::kernels
