#include "tgl/bundle.hpp"

#include <string>
#include <vector>

#include "json.hpp"

#include "io_util.hpp"
#include "tgl/rng.hpp"

namespace tgl::bundle {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string checksum_hex(std::string_view content) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(rng::fnv1a(content)));
  return buf;
}

std::string edges_file_name(int t) {
  return "snapshot_" + std::to_string(t) + ".edges.tsv";
}

std::string nodes_file_name(int t) {
  return "snapshot_" + std::to_string(t) + ".nodes.csv";
}

std::string render_genes(const graph::GeneVocab& vocab) {
  std::string out;
  for (const std::string& s : vocab.symbols()) {
    out += s;
    out += '\n';
  }
  return out;
}

std::string render_edges(const graph::Snapshot& s) {
  std::string out = "src_id\tdst_id\tconfidence\n";
  for (const graph::Edge& e : s.edges) {
    out += std::to_string(e.src);
    out += '\t';
    out += std::to_string(e.dst);
    out += '\t';
    out += detail::fmt_double(e.confidence);
    out += '\n';
  }
  return out;
}

std::string nodes_header(int d_x) {
  std::string h = "mean,median,std,frac_nonzero,total";
  for (int j = graph::kBaseFeatures; j < d_x; ++j)
    h += ",emb_" + std::to_string(j - graph::kBaseFeatures);
  return h;
}

std::string render_nodes(const graph::Snapshot& s) {
  std::string out = nodes_header(s.node_features.cols());
  out += '\n';
  for (int i = 0; i < s.node_features.rows(); ++i) {
    for (int j = 0; j < s.node_features.cols(); ++j) {
      if (j) out += ',';
      out += detail::fmt_double(s.node_features(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void save_bundle(const graph::TemporalGraph& tg, const fs::path& dir) {
  if (tg.T() < 2) fail(Errc::too_few_snapshots, "bundle needs T >= 2");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io_failure, "cannot create '" + dir.string() + "': " + ec.message());

  ordered_json checksums;
  auto emit = [&](const std::string& name, const std::string& content) {
    detail::write_file(dir / name, content);
    checksums[name] = checksum_hex(content);
  };

  emit("genes.tsv", render_genes(tg.vocab));
  for (const graph::Snapshot& s : tg.snapshots) {
    emit(edges_file_name(s.t), render_edges(s));
    emit(nodes_file_name(s.t), render_nodes(s));
  }

  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["num_genes"] = tg.num_genes();
  manifest["num_snapshots"] = tg.T();
  manifest["d_x"] = tg.snapshots.front().node_features.cols();
  manifest["checksums"] = checksums;
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::string verified_read(const fs::path& dir, const std::string& name,
                          const ordered_json& checksums) {
  std::string content = detail::read_file(dir / name);
  auto it = checksums.find(name);
  if (it == checksums.end())
    fail(Errc::schema_mismatch, "manifest lists no checksum for '" + name + "'");
  if (checksum_hex(content) != it->get<std::string>())
    fail(Errc::checksum_mismatch, "'" + name + "' does not match its manifest checksum");
  return content;
}

std::vector<graph::Edge> parse_edges(const std::string& content,
                                     const std::string& name) {
  auto lines = detail::split_lines(content);
  if (lines.empty() || lines[0] != "src_id\tdst_id\tconfidence")
    fail(Errc::schema_mismatch, name + ": bad or missing edge header");
  std::vector<graph::Edge> edges;
  edges.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto parts = detail::split(lines[i], '\t');
    if (parts.size() != 3)
      fail(Errc::parse_error, name + " line " + std::to_string(i + 1) +
                                  ": expected 3 tab-separated fields");
    graph::Edge e;
    e.src = static_cast<int>(detail::parse_int(parts[0], name));
    e.dst = static_cast<int>(detail::parse_int(parts[1], name));
    e.confidence = detail::parse_double(parts[2], name);
    edges.push_back(e);
  }
  return edges;
}

Matrix parse_nodes(const std::string& content, const std::string& name,
                   int n_genes, int d_x) {
  auto lines = detail::split_lines(content);
  if (lines.empty() || lines[0] != nodes_header(d_x))
    fail(Errc::schema_mismatch, name + ": bad or missing node-feature header");
  if (static_cast<int>(lines.size()) - 1 != n_genes)
    fail(Errc::dimension_mismatch,
         name + ": expected " + std::to_string(n_genes) + " feature rows, got " +
             std::to_string(lines.size() - 1));
  Matrix m(n_genes, d_x);
  for (int i = 0; i < n_genes; ++i) {
    auto parts = detail::split(lines[i + 1], ',');
    if (static_cast<int>(parts.size()) != d_x)
      fail(Errc::dimension_mismatch, name + " row " + std::to_string(i) +
                                         ": expected " + std::to_string(d_x) +
                                         " columns");
    for (int j = 0; j < d_x; ++j) m(i, j) = detail::parse_double(parts[j], name);
  }
  return m;
}

}  // namespace

graph::TemporalGraph load_bundle(const fs::path& dir) {
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(detail::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, "manifest.json: " + std::string(e.what()));
  }
  if (!manifest.contains("format_version") ||
      manifest["format_version"].get<int>() != kFormatVersion)
    fail(Errc::schema_mismatch, "unsupported bundle format version");
  for (const char* key : {"num_genes", "num_snapshots", "d_x", "checksums"})
    if (!manifest.contains(key))
      fail(Errc::schema_mismatch, std::string("manifest missing '") + key + "'");
  int n_genes = manifest["num_genes"].get<int>();
  int n_snapshots = manifest["num_snapshots"].get<int>();
  int d_x = manifest["d_x"].get<int>();
  const ordered_json& checksums = manifest["checksums"];

  std::string genes_raw = verified_read(dir, "genes.tsv", checksums);
  std::vector<std::string> symbols;
  for (std::string_view line : detail::split_lines(genes_raw))
    symbols.emplace_back(line);
  if (static_cast<int>(symbols.size()) != n_genes)
    fail(Errc::dimension_mismatch,
         "genes.tsv has " + std::to_string(symbols.size()) +
             " symbols, manifest says " + std::to_string(n_genes));
  graph::GeneVocab vocab = graph::GeneVocab::from_symbols(std::move(symbols));

  std::vector<graph::Snapshot> snapshots;
  snapshots.reserve(n_snapshots);
  for (int t = 1; t <= n_snapshots; ++t) {
    graph::Snapshot s;
    s.t = t;
    std::string ename = edges_file_name(t);
    std::string nname = nodes_file_name(t);
    s.edges = parse_edges(verified_read(dir, ename, checksums), ename);
    s.node_features =
        parse_nodes(verified_read(dir, nname, checksums), nname, n_genes, d_x);
    snapshots.push_back(std::move(s));
  }
  return graph::build_temporal_graph(std::move(vocab), std::move(snapshots));
}

}  // namespace tgl::bundle
