#include "tgl/graph.hpp"

#include <unordered_set>

#include "tgl/errors.hpp"

namespace tgl::graph {

GeneVocab GeneVocab::from_symbols(std::vector<std::string> symbols) {
  if (symbols.size() < 2)
    fail(Errc::vocab_too_small, "need at least 2 gene symbols, got " +
                                    std::to_string(symbols.size()));
  GeneVocab v;
  v.symbols_ = std::move(symbols);
  v.index_.reserve(v.symbols_.size());
  for (int i = 0; i < static_cast<int>(v.symbols_.size()); ++i) {
    if (v.symbols_[i].empty())
      fail(Errc::parse_error, "empty gene symbol at position " + std::to_string(i));
    auto [it, inserted] = v.index_.emplace(v.symbols_[i], i);
    (void)it;
    if (!inserted)
      fail(Errc::duplicate_edge, "duplicate gene symbol '" + v.symbols_[i] + "'");
  }
  return v;
}

namespace {

void validate_edges(const std::vector<Edge>& edges, int vocab_size, int t) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= vocab_size || e.dst < 0 || e.dst >= vocab_size)
      fail(Errc::id_out_of_range,
           "snapshot " + std::to_string(t) + ": edge (" + std::to_string(e.src) +
               "," + std::to_string(e.dst) + ") outside vocabulary of size " +
               std::to_string(vocab_size));
    if (e.src == e.dst)
      fail(Errc::self_loop, "snapshot " + std::to_string(t) + ": self-loop at gene " +
                                std::to_string(e.src));
    if (e.confidence < 0.0)
      fail(Errc::negative_confidence,
           "snapshot " + std::to_string(t) + ": edge (" + std::to_string(e.src) +
               "," + std::to_string(e.dst) + ") has confidence " +
               std::to_string(e.confidence));
    if (!seen.insert(pair_key(e.src, e.dst)).second)
      fail(Errc::duplicate_edge,
           "snapshot " + std::to_string(t) + ": duplicate edge (" +
               std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
  }
}

}  // namespace

TemporalGraph build_temporal_graph(GeneVocab vocab,
                                   std::vector<Snapshot> snapshots) {
  if (snapshots.size() < 2)
    fail(Errc::too_few_snapshots, "temporal graph needs T >= 2, got " +
                                      std::to_string(snapshots.size()));
  int n = vocab.size();
  int d_x = -1;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    Snapshot& s = snapshots[i];
    s.t = static_cast<int>(i) + 1;
    validate_edges(s.edges, n, s.t);
    if (s.node_features.empty()) s.node_features = Matrix(n, kBaseFeatures);
    if (s.node_features.rows() != n)
      fail(Errc::dimension_mismatch,
           "snapshot " + std::to_string(s.t) + ": feature rows " +
               std::to_string(s.node_features.rows()) + " != vocab size " +
               std::to_string(n));
    if (d_x < 0) d_x = s.node_features.cols();
    if (s.node_features.cols() != d_x)
      fail(Errc::dimension_mismatch,
           "snapshot " + std::to_string(s.t) + ": feature width " +
               std::to_string(s.node_features.cols()) +
               " differs from earlier snapshots (" + std::to_string(d_x) + ")");
    s.active_mask.assign(n, 0);
    for (const Edge& e : s.edges) {
      s.active_mask[e.src] = 1;
      s.active_mask[e.dst] = 1;
    }
  }
  TemporalGraph tg;
  tg.vocab = std::move(vocab);
  tg.snapshots = std::move(snapshots);
  return tg;
}

RecurrenceSeries recurrence_stats(const TemporalGraph& tg) {
  if (tg.T() < 2)
    fail(Errc::too_few_snapshots, "recurrence statistics need T >= 2");
  RecurrenceSeries out;
  std::unordered_set<std::uint64_t> history;
  for (const Edge& e : tg.snapshots[0].edges)
    history.insert(pair_key(e.src, e.dst));
  double sum = 0.0;
  int counted = 0;
  for (int t = 2; t <= tg.T(); ++t) {
    const Snapshot& s = tg.snapshots[t - 1];
    RecurrencePoint p;
    p.t = t;
    if (s.edges.empty()) {
      // No edges means nothing can recur; counted as fully new so the
      // per-entry invariant recurrent + new = 1 still holds.
      p.recurrent_fraction = 0.0;
      p.new_fraction = 1.0;
    } else {
      int rec = 0;
      for (const Edge& e : s.edges)
        if (history.count(pair_key(e.src, e.dst))) ++rec;
      p.recurrent_fraction = static_cast<double>(rec) / s.edges.size();
      p.new_fraction = 1.0 - p.recurrent_fraction;
    }
    sum += p.recurrent_fraction;
    ++counted;
    out.per_snapshot.push_back(p);
    for (const Edge& e : s.edges) history.insert(pair_key(e.src, e.dst));
  }
  out.average = counted > 0 ? sum / counted : 0.0;
  return out;
}

std::vector<double> out_degree_centrality(const Snapshot& s, int vocab_size) {
  if (vocab_size < 2)
    fail(Errc::vocab_too_small, "centrality undefined for |V| < 2");
  std::vector<double> c(vocab_size, 0.0);
  for (const Edge& e : s.edges) {
    if (e.src < 0 || e.src >= vocab_size)
      fail(Errc::id_out_of_range, "edge source outside vocabulary");
    c[e.src] += 1.0;
  }
  double denom = vocab_size - 1;
  for (double& v : c) v /= denom;
  return c;
}

}  // namespace tgl::graph
