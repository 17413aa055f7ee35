#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "tgl/bundle.hpp"
#include "tgl/graph.hpp"
#include "tgl/rng.hpp"

namespace {

namespace tg = tgl::graph;

tg::GeneVocab vocab_of(int n) {
  std::vector<std::string> syms;
  for (int i = 0; i < n; ++i) syms.push_back("G" + std::to_string(i));
  return tg::GeneVocab::from_symbols(std::move(syms));
}

tg::Snapshot snap(std::vector<tg::Edge> edges) {
  tg::Snapshot s;
  s.edges = std::move(edges);
  return s;
}

// Random temporal graph for serialization properties: random edges,
// random features with awkward values (negative, tiny, huge).
tg::TemporalGraph random_graph(int n, int T, std::uint64_t seed) {
  tgl::rng::Rng rng(seed);
  std::vector<tg::Snapshot> snaps;
  for (int t = 0; t < T; ++t) {
    tg::Snapshot s;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng.uniform() < 0.1)
          s.edges.push_back({i, j, rng.uniform()});
    s.node_features = tgl::Matrix(n, 5);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 5; ++c)
        s.node_features(i, c) = rng.normal() * std::pow(10.0, (int)(rng.below(7)) - 3);
    snaps.push_back(std::move(s));
  }
  return tg::build_temporal_graph(vocab_of(n), std::move(snaps));
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("two-snapshot construction fixes masks and indices") {
  auto g = tg::build_temporal_graph(
      vocab_of(3), {snap({{0, 1, 1.0}}), snap({{0, 1, 1.0}, {1, 2, 0.5}})});
  CHECK(g.T() == 2);
  CHECK(g.snapshots[0].t == 1);
  CHECK(g.snapshots[1].t == 2);
  CHECK(g.snapshots[0].active_mask == std::vector<std::uint8_t>{1, 1, 0});
  CHECK(g.snapshots[1].active_mask == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(g.snapshots[0].node_features.rows() == 3);
  CHECK(g.snapshots[0].node_features.cols() == 5);
}

TEST_CASE("construction rejects malformed inputs") {
  CHECK_THROWS_WITH_AS(
      tg::build_temporal_graph(vocab_of(3), {snap({{0, 0, 1.0}}), snap({})}),
      doctest::Contains("SelfLoop"), tgl::Error);
  CHECK_THROWS_WITH_AS(
      tg::build_temporal_graph(vocab_of(3),
                               {snap({{0, 1, 1.0}, {0, 1, 2.0}}), snap({})}),
      doctest::Contains("DuplicateEdge"), tgl::Error);
  CHECK_THROWS_WITH_AS(
      tg::build_temporal_graph(vocab_of(3), {snap({{0, 7, 1.0}}), snap({})}),
      doctest::Contains("IdOutOfRange"), tgl::Error);
  CHECK_THROWS_WITH_AS(
      tg::build_temporal_graph(vocab_of(3), {snap({{0, 1, -1.0}}), snap({})}),
      doctest::Contains("NegativeConfidence"), tgl::Error);
  CHECK_THROWS_WITH_AS(tg::build_temporal_graph(vocab_of(3), {snap({})}),
                       doctest::Contains("TooFewSnapshots"), tgl::Error);
  CHECK_THROWS_AS(vocab_of(1), tgl::Error);
  CHECK_THROWS_AS(tg::GeneVocab::from_symbols({"A", "A"}), tgl::Error);
}

TEST_CASE("active mask matches degree for random graphs") {
  auto g = random_graph(12, 4, 17);
  for (const auto& s : g.snapshots) {
    std::vector<int> deg(12, 0);
    for (const auto& e : s.edges) {
      deg[e.src]++;
      deg[e.dst]++;
    }
    for (int i = 0; i < 12; ++i)
      CHECK(static_cast<bool>(s.active_mask[i]) == (deg[i] > 0));
  }
}

TEST_CASE("recurrence on identical snapshots is 1, on disjoint snapshots 0") {
  std::vector<tg::Edge> e = {{0, 1, 1.0}, {1, 2, 1.0}};
  auto same = tg::build_temporal_graph(vocab_of(3), {snap(e), snap(e), snap(e)});
  auto rs = tg::recurrence_stats(same);
  REQUIRE(rs.per_snapshot.size() == 2);
  for (const auto& p : rs.per_snapshot) {
    CHECK(p.recurrent_fraction == 1.0);
    CHECK(p.new_fraction == 0.0);
  }
  CHECK(rs.average == 1.0);

  auto disjoint = tg::build_temporal_graph(
      vocab_of(6),
      {snap({{0, 1, 1.0}}), snap({{2, 3, 1.0}}), snap({{4, 5, 1.0}})});
  auto rd = tg::recurrence_stats(disjoint);
  for (const auto& p : rd.per_snapshot) CHECK(p.recurrent_fraction == 0.0);
  CHECK(rd.average == 0.0);
}

TEST_CASE("recurrence uses the cumulative union, not just t-1") {
  // Edge (0,1) appears at t=1, vanishes at t=2, returns at t=3; cumulative
  // history still counts it as recurrent at t=3.
  auto g = tg::build_temporal_graph(
      vocab_of(3), {snap({{0, 1, 1.0}}), snap({{1, 2, 1.0}}), snap({{0, 1, 1.0}})});
  auto rs = tg::recurrence_stats(g);
  CHECK(rs.per_snapshot[0].recurrent_fraction == 0.0);
  CHECK(rs.per_snapshot[1].recurrent_fraction == 1.0);
  CHECK(rs.average == 0.5);
}

TEST_CASE("out-degree centrality normalizes by |V|-1 and sums to |E|/(|V|-1)") {
  auto g = tg::build_temporal_graph(
      vocab_of(4), {snap({{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}), snap({})});
  auto c = tg::out_degree_centrality(g.snapshots[0], 4);
  CHECK(c[0] == doctest::Approx(2.0 / 3.0));
  CHECK(c[1] == doctest::Approx(1.0 / 3.0));
  CHECK(c[2] == 0.0);
  CHECK(c[3] == 0.0);
  double total = c[0] + c[1] + c[2] + c[3];
  CHECK(total == doctest::Approx(3.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("bundle save then load is the identity") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tgl_bundle_test";
  fs::remove_all(dir);
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    auto g = random_graph(3 + static_cast<int>(seed) * 7, 2 + seed % 5, seed);
    tgl::bundle::save_bundle(g, dir);
    auto loaded = tgl::bundle::load_bundle(dir);
    CHECK(loaded == g);
  }
  fs::remove_all(dir);
}

TEST_CASE("bundle load detects tampering and schema drift") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tgl_bundle_tamper";
  fs::remove_all(dir);
  auto g = random_graph(6, 3, 99);
  tgl::bundle::save_bundle(g, dir);

  // Flip one byte in an edge file: checksum must catch it.
  {
    std::fstream f(dir / "snapshot_2.edges.tsv", std::ios::in | std::ios::out);
    f.seekp(0);
    f.put('#');
  }
  CHECK_THROWS_WITH_AS(tgl::bundle::load_bundle(dir),
                       doctest::Contains("ChecksumMismatch"), tgl::Error);

  tgl::bundle::save_bundle(g, dir);
  // Unknown format version.
  {
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    f << "{\"format_version\": 942}";
  }
  CHECK_THROWS_WITH_AS(tgl::bundle::load_bundle(dir),
                       doctest::Contains("SchemaMismatch"), tgl::Error);
  fs::remove_all(dir);
}

}  // TEST_SUITE
