#include "tgl/matrix.hpp"

#include <algorithm>
#include <tuple>

namespace tgl {

Csr csr_from_triplets(int rows, int cols,
                      std::vector<std::tuple<int, int, double>> triplets,
                      bool mark_symmetric) {
  for (const auto& [r, c, v] : triplets) {
    (void)v;
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      fail(Errc::id_out_of_range, "triplet index outside matrix shape");
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const auto& a, const auto& b) {
              if (std::get<0>(a) != std::get<0>(b))
                return std::get<0>(a) < std::get<0>(b);
              return std::get<1>(a) < std::get<1>(b);
            });
  for (std::size_t i = 1; i < triplets.size(); ++i) {
    if (std::get<0>(triplets[i]) == std::get<0>(triplets[i - 1]) &&
        std::get<1>(triplets[i]) == std::get<1>(triplets[i - 1]))
      fail(Errc::duplicate_edge, "duplicate entry in sparse matrix");
  }
  Csr s;
  s.rows = rows;
  s.cols = cols;
  s.symmetric = mark_symmetric;
  s.indptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  s.indices.reserve(triplets.size());
  s.values.reserve(triplets.size());
  for (const auto& [r, c, v] : triplets) {
    s.indptr[static_cast<std::size_t>(r) + 1]++;
    s.indices.push_back(c);
    s.values.push_back(v);
  }
  for (int r = 0; r < rows; ++r) s.indptr[r + 1] += s.indptr[r];
  return s;
}

Matrix csr_to_dense(const Csr& s) {
  Matrix d(s.rows, s.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int k = s.indptr[r]; k < s.indptr[r + 1]; ++k)
      d(r, s.indices[k]) = s.values[k];
  return d;
}

}  // namespace tgl
