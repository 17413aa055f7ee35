#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tgl/graph.hpp"

namespace tgl::ingest {

// Gene-by-cell expression matrix with sparse row storage; single-cell data
// is zero-dominant. Values are raw counts: non-negative and finite.
class ExpressionMatrix {
 public:
  ExpressionMatrix(graph::GeneVocab genes, std::vector<std::string> cells);

  int n_genes() const { return genes_.size(); }
  int n_cells() const { return static_cast<int>(cells_.size()); }

  const graph::GeneVocab& genes() const { return genes_; }
  const std::vector<std::string>& cells() const { return cells_; }

  // Nonzero entries of one gene, ascending by cell index.
  const std::vector<std::pair<int, double>>& row(int gene) const {
    return rows_.at(gene);
  }

  double value(int gene, int cell) const;

  // Zero values are dropped; duplicates and malformed values rejected.
  void add(int gene, int cell, double value);

  bool operator==(const ExpressionMatrix& other) const {
    return genes_ == other.genes_ && cells_ == other.cells_ &&
           rows_ == other.rows_;
  }

 private:
  graph::GeneVocab genes_;
  std::vector<std::string> cells_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

enum class ExpressionFormat { dense_csv, matrix_market };

// dense-csv: header = label + cell ids, rows = symbol + values.
// matrix-market: coordinate file plus companion genes.tsv / cells.tsv next
// to it.
ExpressionMatrix load_expression(const std::filesystem::path& path,
                                 ExpressionFormat format);

struct RegulatorList {
  std::vector<int> ids;  // ascending gene ids flagged as TFs
  int skipped = 0;       // symbols not found in the vocabulary
};

RegulatorList load_regulators(const std::filesystem::path& path,
                              const graph::GeneVocab& vocab);

struct EdgeListImport {
  std::vector<std::vector<graph::Edge>> snapshots;  // index 0 = snapshot 1
  int skipped_rows = 0;  // rows naming symbols outside the vocabulary
};

// TSV schema: snapshot_index, source_symbol, target_symbol, confidence.
EdgeListImport import_grn_edgelists(const std::filesystem::path& path,
                                    const graph::GeneVocab& vocab);

struct ExternalEmbeddings {
  Matrix values;           // |V| x d_emb, vocab order
  std::string provenance;  // free text
  int missing_genes = 0;   // vocab genes zero-filled for lack of a row
};

// CSV keyed by gene symbol in the first column; remaining columns are the
// embedding dimensions.
ExternalEmbeddings import_embeddings(const std::filesystem::path& path,
                                     const graph::GeneVocab& vocab);

}  // namespace tgl::ingest
