#include "tgl/grn.hpp"

#include <algorithm>
#include <cmath>

#include "io_util.hpp"
#include "tgl/kernels.hpp"

namespace tgl::grn {

namespace {

// Raw values of one gene over the bin's cells, in bin order.
std::vector<double> gene_values(const ingest::ExpressionMatrix& expr, int gene,
                                const std::vector<int>& bin_cells) {
  std::vector<double> out(bin_cells.size(), 0.0);
  for (std::size_t i = 0; i < bin_cells.size(); ++i)
    out[i] = expr.value(gene, bin_cells[i]);
  return out;
}

void check_bin(const ingest::ExpressionMatrix& expr,
               const std::vector<int>& bin_cells) {
  for (int c : bin_cells)
    if (c < 0 || c >= expr.n_cells())
      fail(Errc::id_out_of_range, "bin references cell " + std::to_string(c));
}

std::vector<double> average_ranks_of(const std::vector<double>& v) {
  int n = static_cast<int>(v.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] < v[b];
    return a < b;
  });
  std::vector<double> ranks(n, 0.0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = (i + j) / 2.0 + 1.0;  // 1-based average rank of the tie run
    for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Matrix node_features(const ingest::ExpressionMatrix& expr,
                     const std::vector<int>& bin_cells) {
  if (bin_cells.empty()) fail(Errc::empty_bin, "node features need >= 1 cell");
  check_bin(expr, bin_cells);
  int n_genes = expr.n_genes();
  int b = static_cast<int>(bin_cells.size());
  Matrix out(n_genes, graph::kBaseFeatures);

  std::vector<int> cell_pos(expr.n_cells(), -1);
  for (int i = 0; i < b; ++i) cell_pos[bin_cells[i]] = i;

  for (int g = 0; g < n_genes; ++g) {
    std::vector<double> nz;
    double total = 0.0;
    for (const auto& [c, v] : expr.row(g)) {
      if (cell_pos[c] < 0) continue;
      nz.push_back(v);
      total += v;
    }
    std::sort(nz.begin(), nz.end());
    int zeros = b - static_cast<int>(nz.size());
    double mean = total / b;

    auto kth = [&](int idx) { return idx < zeros ? 0.0 : nz[idx - zeros]; };
    double median = b % 2 == 1 ? kth(b / 2) : 0.5 * (kth(b / 2 - 1) + kth(b / 2));

    double ss = zeros * mean * mean;
    for (double v : nz) ss += (v - mean) * (v - mean);
    double stddev = std::sqrt(ss / b);

    out(g, 0) = mean;
    out(g, 1) = median;
    out(g, 2) = stddev;
    out(g, 3) = static_cast<double>(nz.size()) / b;
    out(g, 4) = total;
  }
  return out;
}

std::vector<graph::Edge> infer_coexpression_grn(
    const ingest::ExpressionMatrix& expr, const std::vector<int>& bin_cells,
    const ingest::RegulatorList& regulators, const GrnParams& params) {
  if (regulators.ids.empty())
    fail(Errc::no_regulators, "co-expression inference needs >= 1 regulator");
  if (bin_cells.size() < 3)
    fail(Errc::bin_too_small, "co-expression inference needs >= 3 cells, got " +
                                  std::to_string(bin_cells.size()));
  if (params.min_abs_corr <= 0.0 && params.top_k_per_tf <= 0)
    fail(Errc::config_error,
         "at least one of min_abs_corr / top_k_per_tf must be active");
  if (params.min_abs_corr > 1.0)
    fail(Errc::config_error, "min_abs_corr must lie in (0, 1]");
  check_bin(expr, bin_cells);

  int n_genes = expr.n_genes();
  int b = static_cast<int>(bin_cells.size());

  // Participating genes: expressed in enough cells, non-constant over the
  // bin. Their standardized rows make corr = Z Z^T / b.
  std::vector<int> part;  // gene id per Z row
  std::vector<int> z_row_of(n_genes, -1);
  std::vector<std::vector<double>> z_rows;
  for (int g = 0; g < n_genes; ++g) {
    std::vector<double> v = gene_values(expr, g, bin_cells);
    int nnz = 0;
    for (double x : v)
      if (x != 0.0) ++nnz;
    if (nnz < params.min_cells_expressed) continue;
    if (params.corr == CorrKind::spearman) v = average_ranks_of(v);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= b;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    if (ss <= 0.0) continue;  // constant gene: correlation undefined
    double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x = (x - mean) * inv;
    z_row_of[g] = static_cast<int>(part.size());
    part.push_back(g);
    z_rows.push_back(std::move(v));
  }

  std::vector<graph::Edge> edges;
  if (part.empty()) return edges;

  Matrix z(static_cast<int>(part.size()), b);
  for (std::size_t r = 0; r < z_rows.size(); ++r)
    for (int c = 0; c < b; ++c) z(static_cast<int>(r), c) = z_rows[r][c];

  // Correlations of every participating TF against all participating genes.
  std::vector<int> tf_rows;
  for (int tf : regulators.ids)
    if (tf >= 0 && tf < n_genes && z_row_of[tf] >= 0)
      tf_rows.push_back(z_row_of[tf]);
  if (tf_rows.empty()) return edges;

  Matrix ztf(static_cast<int>(tf_rows.size()), b);
  for (std::size_t r = 0; r < tf_rows.size(); ++r)
    for (int c = 0; c < b; ++c)
      ztf(static_cast<int>(r), c) = z(tf_rows[r], c);
  Matrix corr = kernels::matmul(ztf, z, false, true);  // rows ~ TFs

  for (std::size_t r = 0; r < tf_rows.size(); ++r) {
    int tf_gene = part[tf_rows[r]];
    std::vector<graph::Edge> mine;
    for (std::size_t pc = 0; pc < part.size(); ++pc) {
      int target = part[pc];
      if (target == tf_gene) continue;
      double rho = corr(static_cast<int>(r), static_cast<int>(pc));
      rho = std::clamp(rho, -1.0, 1.0);
      double conf = std::abs(rho);
      if (params.min_abs_corr > 0.0 && conf < params.min_abs_corr) continue;
      mine.push_back({tf_gene, target, conf});
    }
    if (params.top_k_per_tf > 0 &&
        static_cast<int>(mine.size()) > params.top_k_per_tf) {
      std::sort(mine.begin(), mine.end(),
                [](const graph::Edge& a, const graph::Edge& b) {
                  if (a.confidence != b.confidence)
                    return a.confidence > b.confidence;
                  return a.dst < b.dst;
                });
      mine.resize(params.top_k_per_tf);
    }
    std::sort(mine.begin(), mine.end(),
              [](const graph::Edge& a, const graph::Edge& b) {
                return a.dst < b.dst;
              });
    edges.insert(edges.end(), mine.begin(), mine.end());
  }
  std::sort(edges.begin(), edges.end(),
            [](const graph::Edge& a, const graph::Edge& b) {
              if (a.src != b.src) return a.src < b.src;
              return a.dst < b.dst;
            });
  return edges;
}

graph::Snapshot assemble_snapshot(
    int t, std::vector<graph::Edge> edges, Matrix features,
    const std::optional<ingest::ExternalEmbeddings>& embeddings,
    int vocab_size) {
  if (features.rows() != vocab_size || features.cols() != graph::kBaseFeatures)
    fail(Errc::dimension_mismatch,
         "snapshot features must be |V| x 5, got " +
             std::to_string(features.rows()) + " x " +
             std::to_string(features.cols()));
  for (const graph::Edge& e : edges)
    if (e.src < 0 || e.src >= vocab_size || e.dst < 0 || e.dst >= vocab_size)
      fail(Errc::dimension_mismatch,
           "edge references gene outside the vocabulary");

  graph::Snapshot s;
  s.t = t;
  if (embeddings) {
    if (embeddings->values.rows() != vocab_size)
      fail(Errc::dimension_mismatch, "embedding rows do not match vocabulary");
    int d_emb = embeddings->values.cols();
    Matrix joined(vocab_size, graph::kBaseFeatures + d_emb);
    for (int i = 0; i < vocab_size; ++i) {
      for (int j = 0; j < graph::kBaseFeatures; ++j) joined(i, j) = features(i, j);
      for (int j = 0; j < d_emb; ++j)
        joined(i, graph::kBaseFeatures + j) = embeddings->values(i, j);
    }
    s.node_features = std::move(joined);
  } else {
    s.node_features = std::move(features);
  }
  s.active_mask.assign(vocab_size, 0);
  for (const graph::Edge& e : edges) {
    s.active_mask[e.src] = 1;
    s.active_mask[e.dst] = 1;
  }
  s.edges = std::move(edges);
  return s;
}

std::string render_edgelists(
    const std::vector<std::vector<graph::Edge>>& snapshots,
    const graph::GeneVocab& vocab) {
  std::string out = "snapshot_index\tsource_symbol\ttarget_symbol\tconfidence\n";
  for (std::size_t t = 0; t < snapshots.size(); ++t)
    for (const graph::Edge& e : snapshots[t]) {
      out += std::to_string(t + 1);
      out += '\t';
      out += vocab.symbol(e.src);
      out += '\t';
      out += vocab.symbol(e.dst);
      out += '\t';
      out += detail::fmt_double(e.confidence);
      out += '\n';
    }
  return out;
}

}  // namespace tgl::grn
