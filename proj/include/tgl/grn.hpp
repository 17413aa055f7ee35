#pragma once

#include <optional>
#include <vector>

#include "tgl/graph.hpp"
#include "tgl/ingest.hpp"

namespace tgl::grn {

enum class CorrKind { pearson, spearman };

struct GrnParams {
  CorrKind corr = CorrKind::spearman;
  double min_abs_corr = 0.3;  // 0 disables the threshold
  int top_k_per_tf = 50;      // 0 disables the per-TF cap
  int min_cells_expressed = 10;
};

// Per-gene [mean, median, population std, nonzero fraction, total] over the
// given cells, on raw counts.
Matrix node_features(const ingest::ExpressionMatrix& expr,
                     const std::vector<int>& bin_cells);

// Directed TF -> target edges scored by |correlation| over the bin's cells.
// Genes below the expression floor and constant genes never touch an edge.
std::vector<graph::Edge> infer_coexpression_grn(
    const ingest::ExpressionMatrix& expr, const std::vector<int>& bin_cells,
    const ingest::RegulatorList& regulators, const GrnParams& params);

// Column-concatenates optional external embeddings onto the 5 statistics
// and derives the active mask.
graph::Snapshot assemble_snapshot(
    int t, std::vector<graph::Edge> edges, Matrix features,
    const std::optional<ingest::ExternalEmbeddings>& embeddings,
    int vocab_size);

// Serializes edge sets in the schema import_grn_edgelists reads, making
// surrogate-inferred and imported GRNs interchangeable.
std::string render_edgelists(
    const std::vector<std::vector<graph::Edge>>& snapshots,
    const graph::GeneVocab& vocab);

}  // namespace tgl::grn
