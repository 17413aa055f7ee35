#pragma once

#include <vector>

#include "tgl/ingest.hpp"
#include "tgl/matrix.hpp"

namespace tgl::trajectory {

struct PreprocessResult {
  Matrix embedding;        // C x n_components cell scores
  int n_components = 0;    // = n_pcs unless the data had lower rank
  bool rank_reduced = false;
};

// Median-library-size normalization, log1p, per-gene centering, then top
// principal components. Uses the Gram-matrix route when C < |V| and the
// gene-covariance route otherwise; both give identical scores.
PreprocessResult preprocess(const ingest::ExpressionMatrix& expr, int n_pcs);

// Adaptive Gaussian kernel on the union-kNN graph:
//   w_ij = exp(-d_ij^2 / (sigma_i sigma_j)),
// sigma_i = distance to the ceil(k/2)-th nearest neighbor. Symmetric, zero
// diagonal.
Csr knn_affinity(const Matrix& embed, int k);

struct PseudotimeAssignment {
  std::vector<double> pseudotime;  // per cell, in [0,1]
  int root_cell = 0;
  int outside_component = 0;  // cells unreachable from the root, pinned to 1
};

// Root auto-selection: the cell with the extremal entry of the second
// diffusion component on the largest connected component.
int select_root(const Csr& affinity);

// Diffusion pseudotime with anisotropic density normalization (alpha = 1)
// and m diffusion components, min-max normalized to [0,1].
PseudotimeAssignment diffusion_pseudotime(const Csr& affinity, int root, int m);

struct BinAssignment {
  std::vector<int> bin_of_cell;    // 1..T per cell
  std::vector<double> boundaries;  // T-1 pseudotime cut points
  std::vector<int> counts;         // T entries, each >= min_cells
  int T = 0;
};

// Equal-frequency binning: T = min(target_bins, floor(C / min_cells)),
// ties broken by cell index.
BinAssignment bin_cells(const PseudotimeAssignment& pt, int min_cells,
                        int target_bins);

}  // namespace tgl::trajectory
