#include "tgl/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <tuple>

#include <Eigen/Dense>

#include "tgl/kernels.hpp"

namespace tgl::trajectory {

namespace {

// Cells x genes matrix after library-size normalization, log1p, and
// per-gene centering. Dense: trajectory inputs are a few hundred cells.
Matrix normalized_cell_matrix(const ingest::ExpressionMatrix& expr) {
  int n_genes = expr.n_genes();
  int n_cells = expr.n_cells();
  std::vector<double> lib(n_cells, 0.0);
  for (int g = 0; g < n_genes; ++g)
    for (const auto& [c, v] : expr.row(g)) lib[c] += v;

  std::vector<double> sorted_lib = lib;
  std::sort(sorted_lib.begin(), sorted_lib.end());
  double median_lib = n_cells % 2 == 1
                          ? sorted_lib[n_cells / 2]
                          : 0.5 * (sorted_lib[n_cells / 2 - 1] + sorted_lib[n_cells / 2]);
  if (median_lib == 0.0)
    fail(Errc::degenerate_input, "cannot preprocess an all-zero expression matrix");

  Matrix m(n_cells, n_genes);
  for (int g = 0; g < n_genes; ++g)
    for (const auto& [c, v] : expr.row(g)) {
      double scale = lib[c] > 0.0 ? median_lib / lib[c] : 0.0;
      m(c, g) = std::log1p(v * scale);
    }
  for (int g = 0; g < n_genes; ++g) {
    double mean = 0.0;
    for (int c = 0; c < n_cells; ++c) mean += m(c, g);
    mean /= n_cells;
    for (int c = 0; c < n_cells; ++c) m(c, g) -= mean;
  }
  return m;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

// Fixes the eigenvector sign so the largest-magnitude entry is positive;
// eigensolver sign choice is otherwise arbitrary.
void canonical_sign(Eigen::VectorXd& v) {
  int arg = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

PreprocessResult preprocess(const ingest::ExpressionMatrix& expr, int n_pcs) {
  int n_cells = expr.n_cells();
  int n_genes = expr.n_genes();
  if (n_pcs < 2) fail(Errc::config_error, "n_pcs must be at least 2");
  if (n_cells <= n_pcs)
    fail(Errc::too_few_cells, "need more cells than principal components");

  Matrix centered = normalized_cell_matrix(expr);
  Eigen::MatrixXd m = to_eigen(centered);

  PreprocessResult out;
  if (n_cells < n_genes) {
    // Gram route: eigenvectors of M M^T give the scores directly.
    Eigen::MatrixXd gram = m * m.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
      fail(Errc::eig_solver_failure, "Gram eigendecomposition failed");
    const auto& evals = solver.eigenvalues();  // ascending
    double top = std::max(evals[n_cells - 1], 0.0);
    int rank = 0;
    for (int i = 0; i < n_cells; ++i)
      if (evals[i] > top * 1e-12 && evals[i] > 0.0) ++rank;
    int n_eff = std::min(n_pcs, rank);
    if (n_eff == 0)
      fail(Errc::degenerate_input, "expression matrix has rank 0 after centering");
    out.n_components = n_eff;
    out.rank_reduced = n_eff < n_pcs;
    out.embedding = Matrix(n_cells, n_eff);
    for (int comp = 0; comp < n_eff; ++comp) {
      int idx = n_cells - 1 - comp;
      Eigen::VectorXd u = solver.eigenvectors().col(idx);
      canonical_sign(u);
      double scale = std::sqrt(std::max(evals[idx], 0.0));
      for (int c = 0; c < n_cells; ++c) out.embedding(c, comp) = u[c] * scale;
    }
  } else {
    // Covariance route: project onto gene-space eigenvectors.
    Eigen::MatrixXd cov = m.transpose() * m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
      fail(Errc::eig_solver_failure, "covariance eigendecomposition failed");
    const auto& evals = solver.eigenvalues();
    double top = std::max(evals[n_genes - 1], 0.0);
    int rank = 0;
    for (int i = 0; i < n_genes; ++i)
      if (evals[i] > top * 1e-12 && evals[i] > 0.0) ++rank;
    int n_eff = std::min(n_pcs, rank);
    if (n_eff == 0)
      fail(Errc::degenerate_input, "expression matrix has rank 0 after centering");
    out.n_components = n_eff;
    out.rank_reduced = n_eff < n_pcs;
    out.embedding = Matrix(n_cells, n_eff);
    for (int comp = 0; comp < n_eff; ++comp) {
      int idx = n_genes - 1 - comp;
      Eigen::VectorXd v = solver.eigenvectors().col(idx);
      canonical_sign(v);
      Eigen::VectorXd scores = m * v;
      for (int c = 0; c < n_cells; ++c) out.embedding(c, comp) = scores[c];
    }
  }
  return out;
}

Csr knn_affinity(const Matrix& embed, int k) {
  int n = embed.rows();
  if (n < 2) fail(Errc::too_few_cells, "affinity needs at least 2 cells");
  if (k < 1 || k >= n)
    fail(Errc::k_too_large, "k must satisfy 1 <= k < C, got k=" + std::to_string(k) +
                                ", C=" + std::to_string(n));

  Matrix d2 = kernels::pairwise_sqdist(embed);

  // Per cell: neighbors ordered by (distance, index), self excluded.
  int half = (k + 1) / 2;
  std::vector<double> sigma(n, 0.0);
  std::vector<std::vector<int>> nn(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
      return a < b;
    });
    // order[0] is i itself (distance 0, index tie-break may place another
    // zero-distance cell first; skip exactly the self entry).
    std::vector<int>& mine = nn[i];
    for (int r = 0; r < n && static_cast<int>(mine.size()) < k; ++r)
      if (order[r] != i) mine.push_back(order[r]);
    double s = std::sqrt(d2(i, mine[half - 1]));
    sigma[i] = std::max(s, 1e-12);
  }

  // Union rule: the pair survives if either endpoint lists the other. The
  // kernel itself is symmetric in (i, j), so emitting both directions from
  // every list and deduplicating yields max-symmetrization for free.
  std::vector<std::tuple<int, int, double>> trips;
  for (int i = 0; i < n; ++i)
    for (int j : nn[i]) {
      double w = d2(i, j) == 0.0 ? 1.0 : std::exp(-d2(i, j) / (sigma[i] * sigma[j]));
      trips.emplace_back(i, j, w);
      trips.emplace_back(j, i, w);
    }
  std::sort(trips.begin(), trips.end());
  trips.erase(std::unique(trips.begin(), trips.end()), trips.end());
  return csr_from_triplets(n, n, std::move(trips), true);
}

namespace {

std::vector<int> component_of(const Csr& a, int root) {
  std::vector<int> comp;
  std::vector<std::uint8_t> seen(a.rows, 0);
  std::queue<int> q;
  q.push(root);
  seen[root] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    comp.push_back(u);
    for (int k = a.indptr[u]; k < a.indptr[u + 1]; ++k) {
      int v = a.indices[k];
      if (!seen[v] && a.values[k] > 0.0) {
        seen[v] = 1;
        q.push(v);
      }
    }
  }
  std::sort(comp.begin(), comp.end());
  return comp;
}

struct DiffusionEig {
  std::vector<double> lambda;        // descending, lambda[0] ~ 1
  Eigen::MatrixXd psi;               // right eigenvectors, column per pair
};

// Density-normalized (alpha = 1) diffusion operator on the sub-graph of
// `comp`, eigendecomposed through its symmetric conjugate.
DiffusionEig diffusion_eigs(const Csr& a, const std::vector<int>& comp,
                            int n_pairs) {
  int n = static_cast<int>(comp.size());
  std::vector<int> local(a.rows, -1);
  for (int i = 0; i < n; ++i) local[comp[i]] = i;

  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int gi = comp[i];
    for (int k = a.indptr[gi]; k < a.indptr[gi + 1]; ++k) {
      int lj = local[a.indices[k]];
      if (lj >= 0) kmat(i, lj) = a.values[k];
    }
  }

  Eigen::VectorXd q = kmat.rowwise().sum();
  for (int i = 0; i < n; ++i)
    if (q[i] <= 0.0) fail(Errc::disconnected_root, "cell with zero kernel mass");
  Eigen::MatrixXd ktilde = kmat;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ktilde(i, j) /= q[i] * q[j];

  Eigen::VectorXd d = ktilde.rowwise().sum();
  Eigen::VectorXd d_inv_sqrt(n);
  for (int i = 0; i < n; ++i) d_inv_sqrt[i] = 1.0 / std::sqrt(d[i]);
  Eigen::MatrixXd sym = ktilde;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sym(i, j) *= d_inv_sqrt[i] * d_inv_sqrt[j];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    fail(Errc::eig_solver_failure, "diffusion operator eigendecomposition failed");

  DiffusionEig out;
  int take = std::min(n_pairs, n);
  out.psi.resize(n, take);
  for (int p = 0; p < take; ++p) {
    int idx = n - 1 - p;  // eigenvalues ascend in Eigen
    out.lambda.push_back(solver.eigenvalues()[idx]);
    Eigen::VectorXd phi = solver.eigenvectors().col(idx);
    canonical_sign(phi);
    out.psi.col(p) = d_inv_sqrt.asDiagonal() * phi;
  }
  return out;
}

}  // namespace

int select_root(const Csr& affinity) {
  if (affinity.rows < 2) fail(Errc::too_few_cells, "root selection needs >= 2 cells");
  // Largest connected component, lowest start index on ties.
  std::vector<std::uint8_t> seen(affinity.rows, 0);
  std::vector<int> best;
  for (int s = 0; s < affinity.rows; ++s) {
    if (seen[s]) continue;
    auto comp = component_of(affinity, s);
    for (int c : comp) seen[c] = 1;
    if (comp.size() > best.size()) best = comp;
  }
  if (best.size() < 2)
    fail(Errc::disconnected_root, "affinity graph has no connected pair of cells");
  auto eig = diffusion_eigs(affinity, best, 2);
  if (eig.psi.cols() < 2)
    fail(Errc::eig_solver_failure, "second diffusion component unavailable");
  int arg = 0;
  double extreme = -1.0;
  for (int i = 0; i < static_cast<int>(best.size()); ++i) {
    double v = std::abs(eig.psi(i, 1));
    if (v > extreme) {
      extreme = v;
      arg = best[i];
    }
  }
  return arg;
}

PseudotimeAssignment diffusion_pseudotime(const Csr& affinity, int root, int m) {
  int n = affinity.rows;
  if (n < 2) fail(Errc::too_few_cells, "pseudotime needs >= 2 cells");
  if (root < 0 || root >= n) fail(Errc::id_out_of_range, "root cell outside range");
  if (m < 2 || m > 15)
    fail(Errc::config_error, "diffusion components m must lie in [2, 15]");

  auto comp = component_of(affinity, root);
  if (comp.size() < 2)
    fail(Errc::disconnected_root, "root cell has no affinity neighbors");

  auto eig = diffusion_eigs(affinity, comp, m + 1);
  int n_pairs = static_cast<int>(eig.lambda.size());

  std::vector<int> local(n, -1);
  for (int i = 0; i < static_cast<int>(comp.size()); ++i) local[comp[i]] = i;
  int lroot = local[root];

  PseudotimeAssignment out;
  out.root_cell = root;
  out.pseudotime.assign(n, 1.0);
  out.outside_component = n - static_cast<int>(comp.size());

  std::vector<double> dist(comp.size(), 0.0);
  double max_dist = 0.0;
  for (std::size_t c = 0; c < comp.size(); ++c) {
    double acc = 0.0;
    for (int p = 1; p < n_pairs; ++p) {
      double lam = std::min(eig.lambda[p], 1.0 - 1e-12);
      double w = lam / (1.0 - lam);
      double diff = eig.psi(static_cast<int>(c), p) - eig.psi(lroot, p);
      acc += w * w * diff * diff;
    }
    dist[c] = std::sqrt(acc);
    max_dist = std::max(max_dist, dist[c]);
  }
  for (std::size_t c = 0; c < comp.size(); ++c)
    out.pseudotime[comp[c]] = max_dist > 0.0 ? dist[c] / max_dist : 0.0;
  out.pseudotime[root] = 0.0;
  return out;
}

BinAssignment bin_cells(const PseudotimeAssignment& pt, int min_cells,
                        int target_bins) {
  int n = static_cast<int>(pt.pseudotime.size());
  if (min_cells < 1) fail(Errc::config_error, "min_cells must be >= 1");
  if (target_bins < 2) fail(Errc::config_error, "target_bins must be >= 2");
  if (n < 2 * min_cells)
    fail(Errc::too_few_cells, "need at least 2*min_cells cells, got " +
                                  std::to_string(n));

  double lo = pt.pseudotime[0], hi = pt.pseudotime[0];
  for (double v : pt.pseudotime) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi)
    fail(Errc::degenerate_input,
         "all cells share one pseudotime value; binning is undefined");

  BinAssignment out;
  out.T = std::min(target_bins, n / min_cells);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pt.pseudotime[a] != pt.pseudotime[b])
      return pt.pseudotime[a] < pt.pseudotime[b];
    return a < b;  // boundary ties break by cell index
  });

  int base = n / out.T;
  int rem = n % out.T;
  out.bin_of_cell.assign(n, 0);
  out.counts.assign(out.T, 0);
  int pos = 0;
  for (int b = 0; b < out.T; ++b) {
    int count = base + (b < rem ? 1 : 0);
    for (int i = 0; i < count; ++i) out.bin_of_cell[order[pos + i]] = b + 1;
    out.counts[b] = count;
    if (b > 0) out.boundaries.push_back(pt.pseudotime[order[pos]]);
    pos += count;
  }
  return out;
}

}  // namespace tgl::trajectory
