#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tgl/matrix.hpp"

namespace tgl::graph {

// Number of per-gene summary statistics in the base node-feature block:
// mean, median, std, nonzero fraction, total.
inline constexpr int kBaseFeatures = 5;

// Persistent gene identity across all snapshots. Symbols are case-sensitive
// and the order of first appearance defines the integer ids.
class GeneVocab {
 public:
  GeneVocab() = default;

  static GeneVocab from_symbols(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::optional<int> find(std::string_view symbol) const {
    auto it = index_.find(std::string(symbol));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const GeneVocab& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double confidence = 0.0;

  bool operator==(const Edge& other) const {
    return src == other.src && dst == other.dst &&
           confidence == other.confidence;
  }
};

// Packs an ordered pair into one key for set membership tests.
inline std::uint64_t pair_key(int src, int dst) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src)) << 32) |
         static_cast<std::uint32_t>(dst);
}

struct Snapshot {
  int t = 0;  // 1-based index within the temporal graph
  std::vector<Edge> edges;
  Matrix node_features;               // |V| x d_x
  std::vector<std::uint8_t> active_mask;  // |V|, 1 iff endpoint of >= 1 edge

  bool operator==(const Snapshot& other) const {
    return t == other.t && edges == other.edges &&
           node_features == other.node_features &&
           active_mask == other.active_mask;
  }
};

struct TemporalGraph {
  GeneVocab vocab;
  std::vector<Snapshot> snapshots;

  int T() const { return static_cast<int>(snapshots.size()); }
  int num_genes() const { return vocab.size(); }

  bool operator==(const TemporalGraph& other) const {
    return vocab == other.vocab && snapshots == other.snapshots;
  }
};

// Validates edges against the vocabulary, recomputes active masks, assigns
// 1-based snapshot indices. Snapshots with empty node_features get an
// all-zero |V| x 5 feature block so that downstream shapes stay total.
TemporalGraph build_temporal_graph(GeneVocab vocab,
                                   std::vector<Snapshot> snapshots);

struct RecurrencePoint {
  int t = 0;  // snapshot index >= 2
  double recurrent_fraction = 0.0;
  double new_fraction = 0.0;
};

struct RecurrenceSeries {
  std::vector<RecurrencePoint> per_snapshot;  // t = 2..T
  double average = 0.0;
};

// An edge at time t is recurrent when it appeared in any snapshot s < t
// (cumulative union, the memory model EdgeBank uses).
RecurrenceSeries recurrence_stats(const TemporalGraph& tg);

// Entry i = out_degree(i) / (|V| - 1).
std::vector<double> out_degree_centrality(const Snapshot& s, int vocab_size);

}  // namespace tgl::graph
