#include "tgl/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "io_util.hpp"

namespace tgl::ingest {

namespace fs = std::filesystem;

ExpressionMatrix::ExpressionMatrix(graph::GeneVocab genes,
                                   std::vector<std::string> cells)
    : genes_(std::move(genes)), cells_(std::move(cells)) {
  if (cells_.empty()) fail(Errc::empty_input, "expression matrix needs C >= 1");
  rows_.resize(genes_.size());
}

double ExpressionMatrix::value(int gene, int cell) const {
  const auto& r = rows_.at(gene);
  auto it = std::lower_bound(
      r.begin(), r.end(), cell,
      [](const std::pair<int, double>& e, int c) { return e.first < c; });
  if (it != r.end() && it->first == cell) return it->second;
  return 0.0;
}

void ExpressionMatrix::add(int gene, int cell, double v) {
  if (gene < 0 || gene >= n_genes() || cell < 0 || cell >= n_cells())
    fail(Errc::id_out_of_range, "expression entry outside matrix shape");
  if (std::isnan(v) || std::isinf(v))
    fail(Errc::parse_error, "non-finite expression value");
  if (v < 0.0)
    fail(Errc::negative_value,
         "negative expression for gene " + genes_.symbol(gene));
  if (v == 0.0) return;
  auto& r = rows_[gene];
  if (!r.empty() && r.back().first >= cell) {
    auto it = std::lower_bound(
        r.begin(), r.end(), cell,
        [](const std::pair<int, double>& e, int c) { return e.first < c; });
    if (it != r.end() && it->first == cell)
      fail(Errc::parse_error, "duplicate expression entry for gene " +
                                  genes_.symbol(gene) + ", cell " +
                                  std::to_string(cell));
    r.insert(it, {cell, v});
    return;
  }
  r.push_back({cell, v});
}

namespace {

ExpressionMatrix load_dense_csv(const fs::path& path) {
  std::string raw = detail::read_file(path);
  auto lines = detail::split_lines(raw);
  if (lines.size() < 2)
    fail(Errc::empty_input, path.string() + ": no data rows");
  auto header = detail::split(lines[0], ',');
  if (header.size() < 2)
    fail(Errc::parse_error, path.string() + ": header has no cell columns");
  std::vector<std::string> cells;
  for (std::size_t i = 1; i < header.size(); ++i)
    cells.emplace_back(detail::trim(header[i]));

  std::vector<std::string> symbols;
  symbols.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto parts = detail::split(lines[i], ',');
    if (parts.size() != header.size())
      fail(Errc::dimension_mismatch,
           path.string() + " line " + std::to_string(i + 1) + ": expected " +
               std::to_string(header.size()) + " fields, got " +
               std::to_string(parts.size()));
    symbols.emplace_back(detail::trim(parts[0]));
  }

  ExpressionMatrix m(graph::GeneVocab::from_symbols(std::move(symbols)),
                     std::move(cells));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto parts = detail::split(lines[i], ',');
    for (std::size_t c = 1; c < parts.size(); ++c) {
      double v = detail::parse_double(detail::trim(parts[c]),
                                      path.string() + " line " + std::to_string(i + 1));
      m.add(static_cast<int>(i) - 1, static_cast<int>(c) - 1, v);
    }
  }
  return m;
}

std::vector<std::string> read_symbol_lines(const fs::path& path) {
  std::string raw = detail::read_file(path);
  std::vector<std::string> out;
  for (std::string_view line : detail::split_lines(raw)) {
    std::string_view t = detail::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

ExpressionMatrix load_matrix_market(const fs::path& path) {
  std::string raw = detail::read_file(path);
  auto lines = detail::split_lines(raw);
  if (lines.empty()) fail(Errc::empty_input, path.string() + ": empty file");
  std::string_view banner = lines[0];
  if (banner.substr(0, 14) != "%%MatrixMarket")
    fail(Errc::parse_error, path.string() + ": missing MatrixMarket banner");
  if (banner.find("coordinate") == std::string_view::npos)
    fail(Errc::parse_error, path.string() + ": only coordinate format supported");

  std::size_t i = 1;
  while (i < lines.size() && (lines[i].empty() || lines[i][0] == '%')) ++i;
  if (i >= lines.size())
    fail(Errc::parse_error, path.string() + ": missing size line");
  auto dims = detail::split(detail::trim(lines[i]), ' ');
  std::erase_if(dims, [](std::string_view s) { return s.empty(); });
  if (dims.size() != 3)
    fail(Errc::parse_error, path.string() + ": size line needs rows cols nnz");
  int n_genes = static_cast<int>(detail::parse_int(dims[0], path.string()));
  int n_cells = static_cast<int>(detail::parse_int(dims[1], path.string()));
  long long nnz = detail::parse_int(dims[2], path.string());

  auto genes = read_symbol_lines(path.parent_path() / "genes.tsv");
  auto cell_ids = read_symbol_lines(path.parent_path() / "cells.tsv");
  if (static_cast<int>(genes.size()) != n_genes)
    fail(Errc::dimension_mismatch,
         "genes.tsv has " + std::to_string(genes.size()) +
             " symbols, matrix declares " + std::to_string(n_genes));
  if (static_cast<int>(cell_ids.size()) != n_cells)
    fail(Errc::dimension_mismatch,
         "cells.tsv has " + std::to_string(cell_ids.size()) +
             " ids, matrix declares " + std::to_string(n_cells));

  ExpressionMatrix m(graph::GeneVocab::from_symbols(std::move(genes)),
                     std::move(cell_ids));
  long long seen = 0;
  for (++i; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty()) continue;
    auto parts = detail::split(line, ' ');
    std::erase_if(parts, [](std::string_view s) { return s.empty(); });
    if (parts.size() != 3)
      fail(Errc::parse_error, path.string() + " line " + std::to_string(i + 1) +
                                  ": expected 'row col value'");
    std::string ctx = path.string() + " line " + std::to_string(i + 1);
    int g = static_cast<int>(detail::parse_int(parts[0], ctx));
    int c = static_cast<int>(detail::parse_int(parts[1], ctx));
    double v = detail::parse_double(parts[2], ctx);
    if (g < 1 || g > n_genes || c < 1 || c > n_cells)
      fail(Errc::id_out_of_range, ctx + ": coordinate outside declared shape");
    if (v < 0.0)
      fail(Errc::negative_value, ctx + ": negative expression value");
    m.add(g - 1, c - 1, v);
    ++seen;
  }
  if (seen != nnz)
    fail(Errc::dimension_mismatch,
         path.string() + ": declared " + std::to_string(nnz) +
             " entries, found " + std::to_string(seen));
  return m;
}

}  // namespace

ExpressionMatrix load_expression(const fs::path& path, ExpressionFormat format) {
  switch (format) {
    case ExpressionFormat::dense_csv: return load_dense_csv(path);
    case ExpressionFormat::matrix_market: return load_matrix_market(path);
  }
  fail(Errc::config_error, "unknown expression format");
}

RegulatorList load_regulators(const fs::path& path,
                              const graph::GeneVocab& vocab) {
  RegulatorList out;
  std::unordered_set<std::string> seen;
  for (const std::string& sym : read_symbol_lines(path)) {
    if (!seen.insert(sym).second) continue;
    if (auto id = vocab.find(sym))
      out.ids.push_back(*id);
    else
      out.skipped++;
  }
  std::sort(out.ids.begin(), out.ids.end());
  if (out.ids.empty())
    fail(Errc::empty_after_filtering,
         path.string() + ": no regulator symbol matches the vocabulary");
  return out;
}

EdgeListImport import_grn_edgelists(const fs::path& path,
                                    const graph::GeneVocab& vocab) {
  std::string raw = detail::read_file(path);
  auto lines = detail::split_lines(raw);
  if (lines.empty() ||
      lines[0] != "snapshot_index\tsource_symbol\ttarget_symbol\tconfidence")
    fail(Errc::schema_mismatch,
         path.string() + ": expected header 'snapshot_index\\tsource_symbol\\t"
                         "target_symbol\\tconfidence'");
  EdgeListImport out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    auto parts = detail::split(lines[i], '\t');
    if (parts.size() != 4)
      fail(Errc::parse_error, path.string() + " line " + std::to_string(i + 1) +
                                  ": expected 4 tab-separated fields");
    std::string ctx = path.string() + " line " + std::to_string(i + 1);
    long long t = detail::parse_int(detail::trim(parts[0]), ctx);
    if (t < 1 || t > 100000)
      fail(Errc::parse_error, ctx + ": snapshot_index must be a small positive integer");
    double conf = detail::parse_double(detail::trim(parts[3]), ctx);
    if (conf < 0.0)
      fail(Errc::negative_confidence, ctx + ": confidence " + std::to_string(conf));
    auto src = vocab.find(detail::trim(parts[1]));
    auto dst = vocab.find(detail::trim(parts[2]));
    if (static_cast<std::size_t>(t) > out.snapshots.size())
      out.snapshots.resize(static_cast<std::size_t>(t));
    if (!src || !dst) {
      out.skipped_rows++;
      continue;
    }
    out.snapshots[static_cast<std::size_t>(t) - 1].push_back(
        {*src, *dst, conf});
  }
  if (out.snapshots.empty())
    fail(Errc::no_snapshots, path.string() + ": no snapshot rows found");
  return out;
}

ExternalEmbeddings import_embeddings(const fs::path& path,
                                     const graph::GeneVocab& vocab) {
  std::string raw = detail::read_file(path);
  auto lines = detail::split_lines(raw);
  if (lines.size() < 2)
    fail(Errc::empty_input, path.string() + ": no embedding rows");
  auto header = detail::split(lines[0], ',');
  int d_emb = static_cast<int>(header.size()) - 1;
  if (d_emb < 1)
    fail(Errc::parse_error, path.string() + ": header has no embedding columns");

  ExternalEmbeddings out;
  out.values = Matrix(vocab.size(), d_emb);
  out.provenance = path.filename().string();
  std::vector<std::uint8_t> filled(vocab.size(), 0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    auto parts = detail::split(lines[i], ',');
    if (static_cast<int>(parts.size()) != d_emb + 1)
      fail(Errc::dimension_mismatch,
           path.string() + " line " + std::to_string(i + 1) + ": expected " +
               std::to_string(d_emb + 1) + " fields");
    auto id = vocab.find(detail::trim(parts[0]));
    if (!id) continue;
    std::string ctx = path.string() + " line " + std::to_string(i + 1);
    for (int j = 0; j < d_emb; ++j) {
      double v = detail::parse_double(detail::trim(parts[j + 1]), ctx);
      if (std::isnan(v) || std::isinf(v))
        fail(Errc::parse_error, ctx + ": non-finite embedding value");
      out.values(*id, j) = v;
    }
    filled[*id] = 1;
  }
  for (int i = 0; i < vocab.size(); ++i)
    if (!filled[i]) out.missing_genes++;
  if (out.missing_genes == vocab.size())
    fail(Errc::all_genes_missing,
         path.string() + ": no vocabulary gene has an embedding row");
  return out;
}

}  // namespace tgl::ingest
