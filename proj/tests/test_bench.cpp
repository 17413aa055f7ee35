#include "tgl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tgl/config.hpp"
#include "tgl/errors.hpp"
#include "tgl/graph.hpp"
#include "tgl/rng.hpp"

using namespace tgl;
using bench::Task;

namespace {

// Random features with column 0 acting as the mean-expression channel.
Matrix random_features(int n, int d, std::uint64_t seed) {
  rng::Rng rng(seed);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(0.0, 3.0);
  return x;
}

graph::Snapshot make_snapshot(int n, const std::vector<graph::Edge>& edges,
                              std::uint64_t seed) {
  graph::Snapshot s;
  s.edges = edges;
  s.node_features = random_features(n, 5, seed);
  return s;
}

graph::TemporalGraph make_tg(int n, const std::vector<std::vector<graph::Edge>>& per_t,
                             std::uint64_t seed) {
  std::vector<std::string> symbols;
  for (int i = 0; i < n; ++i) symbols.push_back("G" + std::to_string(i));
  std::vector<graph::Snapshot> snaps;
  for (std::size_t t = 0; t < per_t.size(); ++t) {
    snaps.push_back(make_snapshot(n, per_t[t], rng::derive_seed(seed, std::to_string(t))));
  }
  return graph::build_temporal_graph(graph::GeneVocab::from_symbols(symbols),
                                     std::move(snaps));
}

std::vector<graph::Edge> random_edges(int n, int count, std::uint64_t seed) {
  rng::Rng rng(seed);
  std::set<std::pair<int, int>> seen;
  std::vector<graph::Edge> edges;
  while (static_cast<int>(edges.size()) < count) {
    int s = static_cast<int>(rng.below(n));
    int d = static_cast<int>(rng.below(n));
    if (s == d || !seen.insert({s, d}).second) continue;
    edges.push_back({s, d, rng.uniform(0.1, 2.0)});
  }
  return edges;
}

bool same_value(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

bool same_steps(const std::vector<bench::StepMetrics>& a,
                const std::vector<bench::StepMetrics>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].diverged != b[i].diverged ||
        a[i].n_eval != b[i].n_eval)
      return false;
    for (const char* m : {"auprc", "pcc", "mae", "spearman", "p_at_k_up",
                          "p_at_k_down", "p_at_k_top"}) {
      if (!same_value(bench::metric_value(a[i], m), bench::metric_value(b[i], m)))
        return false;
    }
  }
  return true;
}

bench::TrainParams fast_params() {
  bench::TrainParams tp;
  tp.warmup_epochs = 4;
  tp.finetune_epochs = 2;
  tp.precision_k = 5;
  return tp;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("sample_negatives: saturated graph has no negatives") {
  // 3 active genes, all 6 ordered pairs present.
  std::vector<graph::Edge> edges;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) edges.push_back({i, j, 1.0});
  graph::TemporalGraph tg = make_tg(4, {edges, edges}, 7);  // gene 3 stays inactive
  CHECK_THROWS_AS(bench::sample_negatives(tg.snapshots[0], 1.0, 1), Error);
  try {
    bench::sample_negatives(tg.snapshots[0], 1.0, 1);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_negatives_available);
  }
}

TEST_CASE("sample_negatives: constraints and determinism") {
  // 4 active genes, 2 positives.
  std::vector<graph::Edge> edges = {{0, 1, 1.0}, {2, 3, 0.5}};
  graph::TemporalGraph tg = make_tg(6, {edges, edges}, 11);
  const graph::Snapshot& s = tg.snapshots[0];

  bench::NegativeSample neg = bench::sample_negatives(s, 1.0, 42);
  CHECK(neg.pairs.size() == 2);
  CHECK_FALSE(neg.exhausted);
  for (const auto& [a, b] : neg.pairs) {
    CHECK(a != b);
    CHECK(s.active_mask[a] == 1);
    CHECK(s.active_mask[b] == 1);
    CHECK_FALSE((a == 0 && b == 1));
    CHECK_FALSE((a == 2 && b == 3));
  }

  bench::NegativeSample again = bench::sample_negatives(s, 1.0, 42);
  CHECK(neg.pairs == again.pairs);

  // 4 active genes give 12 ordered pairs, 2 are edges; asking for 20
  // exhausts the 10 feasible ones.
  bench::NegativeSample all = bench::sample_negatives(s, 10.0, 1);
  CHECK(all.exhausted);
  CHECK(all.pairs.size() == 10);
  std::set<std::pair<int, int>> uniq(all.pairs.begin(), all.pairs.end());
  CHECK(uniq.size() == 10);
}

TEST_CASE("expression_target: evaluable intersection and values") {
  // Gene 2 active only at t, gene 3 only at t+1, genes 0/1 at both.
  graph::TemporalGraph tg =
      make_tg(5, {{{0, 1, 1.0}, {1, 2, 1.0}}, {{0, 1, 1.0}, {1, 3, 1.0}}}, 3);
  bench::ExprTarget et = bench::expression_target(tg.snapshots[0], tg.snapshots[1]);
  CHECK(et.genes == std::vector<int>{0, 1});
  for (std::size_t i = 0; i < et.genes.size(); ++i) {
    const int g = et.genes[i];
    CHECK(et.delta[i] == tg.snapshots[1].node_features(g, 0) -
                             tg.snapshots[0].node_features(g, 0));
  }
}

TEST_CASE("expression_target: deltas telescope across the horizon") {
  // Genes 0 and 1 are active in every snapshot, so their deltas must sum
  // to the endpoint difference.
  std::vector<std::vector<graph::Edge>> per_t;
  for (int t = 0; t < 6; ++t) {
    std::vector<graph::Edge> e;
    for (const graph::Edge& re : random_edges(8, 6, 100 + t)) {
      if (!(re.src == 0 && re.dst == 1)) e.push_back(re);
    }
    e.push_back({0, 1, 1.0});
    per_t.push_back(e);
  }
  graph::TemporalGraph tg = make_tg(8, per_t, 17);

  for (int g : {0, 1}) {
    double total = 0.0;
    for (int t = 0; t + 1 < tg.T(); ++t) {
      bench::ExprTarget et =
          bench::expression_target(tg.snapshots[t], tg.snapshots[t + 1]);
      for (std::size_t i = 0; i < et.genes.size(); ++i) {
        if (et.genes[i] == g) total += et.delta[i];
      }
    }
    const double want = tg.snapshots[5].node_features(g, 0) -
                        tg.snapshots[0].node_features(g, 0);
    CHECK(total == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("live_update_run: protocol arithmetic") {
  models::ModelConfig bank;
  bank.family = models::Family::edgebank;
  bench::TrainParams tp;

  SUBCASE("T=3 gives exactly one evaluation step, predicting snapshot 3") {
    graph::TemporalGraph tg = make_tg(6, {random_edges(6, 4, 1), random_edges(6, 4, 2),
                                          random_edges(6, 4, 3)},
                                      5);
    bench::RunFragment f = bench::live_update_run(tg, bank, Task::link, tp, 9);
    REQUIRE(f.steps.size() == 1);
    CHECK(f.steps[0].t == 2);
  }
  SUBCASE("T=32 gives 30 evaluation steps") {
    std::vector<std::vector<graph::Edge>> per_t;
    for (int t = 0; t < 32; ++t) per_t.push_back(random_edges(6, 4, 50 + t));
    graph::TemporalGraph tg = make_tg(6, per_t, 5);
    bench::RunFragment f = bench::live_update_run(tg, bank, Task::link, tp, 9);
    CHECK(f.steps.size() == 30);
    CHECK(f.steps.front().t == 2);
    CHECK(f.steps.back().t == 31);
  }
  SUBCASE("T=2 is rejected") {
    graph::TemporalGraph tg = make_tg(6, {random_edges(6, 4, 1), random_edges(6, 4, 2)}, 5);
    CHECK_THROWS_AS(bench::live_update_run(tg, bank, Task::link, tp, 9), Error);
    try {
      bench::live_update_run(tg, bank, Task::link, tp, 9);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::too_few_snapshots);
    }
  }
  SUBCASE("t_warm beyond T-1 is rejected") {
    graph::TemporalGraph tg =
        make_tg(6, {random_edges(6, 4, 1), random_edges(6, 4, 2),
                    random_edges(6, 4, 3), random_edges(6, 4, 4)},
                5);
    bench::TrainParams big = tp;
    big.t_warm = 3;  // T=4 leaves exactly one evaluation step
    bench::RunFragment f = bench::live_update_run(tg, bank, Task::link, big, 9);
    CHECK(f.steps.size() == 1);
    big.t_warm = 4;
    CHECK_THROWS_AS(bench::live_update_run(tg, bank, Task::link, big, 9), Error);
  }
}

TEST_CASE("live_update_run: edgebank is near-perfect on a fully recurrent graph") {
  std::vector<graph::Edge> fixed = random_edges(20, 30, 77);
  std::vector<std::vector<graph::Edge>> per_t(5, fixed);
  graph::TemporalGraph tg = make_tg(20, per_t, 21);

  models::ModelConfig bank;
  bank.family = models::Family::edgebank;
  bench::RunFragment f =
      bench::live_update_run(tg, bank, Task::link, bench::TrainParams{}, 3);
  REQUIRE(f.steps.size() == 3);
  for (const bench::StepMetrics& sm : f.steps) {
    CHECK(sm.auprc >= 0.99);
  }
}

TEST_CASE("live_update_run: deterministic in the seed") {
  std::vector<std::vector<graph::Edge>> per_t;
  for (int t = 0; t < 4; ++t) per_t.push_back(random_edges(10, 12, 400 + t));
  graph::TemporalGraph tg = make_tg(10, per_t, 31);

  models::ModelConfig cfg;
  cfg.family = models::Family::gcrn_gru;
  cfg.hidden = 6;
  cfg.cheb_k = 2;
  cfg.dropout = 0.1;  // exercises the dropout stream too

  for (Task task : bench::all_tasks()) {
    bench::RunFragment a =
        bench::live_update_run(tg, cfg, task, fast_params(), 1234);
    bench::RunFragment b =
        bench::live_update_run(tg, cfg, task, fast_params(), 1234);
    CHECK(same_steps(a.steps, b.steps));
    bench::RunFragment c =
        bench::live_update_run(tg, cfg, task, fast_params(), 99);
    // A different seed must actually change something.
    CHECK_FALSE(same_steps(a.steps, c.steps));
  }
}

TEST_CASE("live_update_run: static families ignore pre-warmup history") {
  // Swap snapshots 1 and 2 (the pre-eval prefix with t_warm=3) and compare
  // step metrics. Encoders that read only snapshot t cannot tell the
  // difference; recurrent state can.
  const int n = 10;
  std::vector<std::vector<graph::Edge>> per_t;
  for (int t = 0; t < 5; ++t) per_t.push_back(random_edges(n, 10, 900 + t));
  graph::TemporalGraph tg = make_tg(n, per_t, 51);

  graph::TemporalGraph swapped = tg;
  std::swap(swapped.snapshots[0], swapped.snapshots[1]);
  std::vector<graph::Snapshot> snaps = swapped.snapshots;
  swapped = graph::build_temporal_graph(tg.vocab, std::move(snaps));

  bench::TrainParams tp;
  tp.t_warm = 3;
  tp.warmup_epochs = 0;  // isolates state effects from training effects
  tp.finetune_epochs = 2;
  tp.precision_k = 5;

  for (models::Family fam : {models::Family::linear, models::Family::gcn,
                             models::Family::chebnet}) {
    models::ModelConfig cfg;
    cfg.family = fam;
    cfg.hidden = 6;
    cfg.cheb_k = 2;
    cfg.dropout = 0.0;
    bench::RunFragment a = bench::live_update_run(tg, cfg, Task::link, tp, 5);
    bench::RunFragment b = bench::live_update_run(swapped, cfg, Task::link, tp, 5);
    CHECK(same_steps(a.steps, b.steps));
  }

  models::ModelConfig grn_cfg;
  grn_cfg.family = models::Family::gcrn_gru;
  grn_cfg.hidden = 6;
  grn_cfg.cheb_k = 2;
  grn_cfg.dropout = 0.0;
  bench::RunFragment a = bench::live_update_run(tg, grn_cfg, Task::link, tp, 5);
  bench::RunFragment b = bench::live_update_run(swapped, grn_cfg, Task::link, tp, 5);
  CHECK_FALSE(same_steps(a.steps, b.steps));
}

TEST_CASE("live_update_run: diverging fine-tune restores the frozen model") {
  std::vector<std::vector<graph::Edge>> per_t;
  for (int t = 0; t < 4; ++t) per_t.push_back(random_edges(8, 8, 700 + t));
  graph::TemporalGraph tg = make_tg(8, per_t, 61);

  models::ModelConfig cfg;
  cfg.family = models::Family::linear;
  cfg.hidden = 4;
  cfg.dropout = 0.0;

  bench::TrainParams calm;
  calm.warmup_epochs = 0;
  calm.finetune_epochs = 0;
  calm.precision_k = 3;

  bench::TrainParams explosive = calm;
  explosive.finetune_epochs = 3;
  explosive.lr = 1e150;  // first step throws the params out of range

  bench::RunFragment frozen =
      bench::live_update_run(tg, cfg, Task::expression, calm, 8);
  bench::RunFragment blown =
      bench::live_update_run(tg, cfg, Task::expression, explosive, 8);

  REQUIRE(frozen.steps.size() == blown.steps.size());
  bool any_diverged = false;
  for (std::size_t i = 0; i < blown.steps.size(); ++i) {
    any_diverged |= blown.steps[i].diverged;
    // Rollback means the recorded metrics match an untrained run exactly.
    CHECK(same_value(blown.steps[i].pcc, frozen.steps[i].pcc));
    CHECK(same_value(blown.steps[i].mae, frozen.steps[i].mae));
  }
  CHECK(any_diverged);
}

TEST_CASE("aggregate_report: closed-form std and NaN exclusion") {
  auto frag = [](double auprc_value) {
    bench::RunFragment f;
    f.model = "m";
    f.task = Task::link;
    f.config_hash = "h";
    bench::StepMetrics sm;
    sm.t = 2;
    sm.auprc = auprc_value;
    f.steps.push_back(sm);
    return f;
  };

  SUBCASE("{0.9, 1.0} gives mean 0.95, std 0.0707...") {
    auto agg = bench::aggregate_report({frag(0.9), frag(1.0)});
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].first == "auprc");
    CHECK(agg[0].second.mean == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(agg[0].second.stddev ==
          doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
    CHECK(agg[0].second.seeds_used == 2);
    CHECK(agg[0].second.missing_steps == 0);
  }
  SUBCASE("identical fragments give std 0") {
    std::vector<bench::RunFragment> fs(5, frag(0.8));
    auto agg = bench::aggregate_report(fs);
    CHECK(agg[0].second.mean == doctest::Approx(0.8));
    CHECK(agg[0].second.stddev == 0.0);
  }
  SUBCASE("single fragment gives std 0 by convention") {
    auto agg = bench::aggregate_report({frag(0.7)});
    CHECK(agg[0].second.stddev == 0.0);
    CHECK(agg[0].second.seeds_used == 1);
  }
  SUBCASE("NaN steps are excluded pairwise with count recorded") {
    bench::RunFragment f1 = frag(0.5);
    bench::StepMetrics extra;
    extra.t = 3;
    f1.steps.push_back(extra);  // auprc NaN
    bench::RunFragment f2 = frag(0.7);
    bench::StepMetrics second;
    second.t = 3;
    second.auprc = 0.9;
    f2.steps.push_back(second);
    auto agg = bench::aggregate_report({f1, f2});
    // Seed means: 0.5 (one missing step) and 0.8.
    CHECK(agg[0].second.mean == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(agg[0].second.missing_steps == 1);
    CHECK(agg[0].second.seeds_used == 2);
  }
  SUBCASE("config hash mismatch is rejected") {
    bench::RunFragment other = frag(0.5);
    other.config_hash = "different";
    CHECK_THROWS_AS(bench::aggregate_report({frag(0.9), other}), Error);
    try {
      bench::aggregate_report({frag(0.9), other});
    } catch (const Error& e) {
      CHECK(e.code() == Errc::config_mismatch);
    }
  }
}

TEST_CASE("hub_heatmap: selection by peak with id tie-break") {
  Matrix pred(2, 4);
  // Gene peaks: g0=0.3, g1=0.9, g2=0.9, g3=0.1.
  pred(0, 0) = 0.3; pred(0, 1) = 0.9; pred(0, 2) = 0.2; pred(0, 3) = 0.1;
  pred(1, 0) = 0.1; pred(1, 1) = 0.4; pred(1, 2) = 0.9; pred(1, 3) = 0.05;

  bench::HubHeatmap hm = bench::hub_heatmap(pred, 3);
  CHECK(hm.genes == std::vector<int>{1, 2, 0});  // tie 1 vs 2 -> lower id first
  CHECK(hm.values.rows() == 3);
  CHECK(hm.values.cols() == 2);
  CHECK(hm.values(0, 0) == 0.9);
  CHECK(hm.values(0, 1) == 0.4);
  CHECK(hm.values(2, 0) == 0.3);

  SUBCASE("top_n larger than |V| keeps everything") {
    bench::HubHeatmap all = bench::hub_heatmap(pred, 20);
    CHECK(all.genes.size() == 4);
  }
  SUBCASE("single step yields one column") {
    Matrix one(1, 4);
    one(0, 2) = 0.5;
    bench::HubHeatmap hm1 = bench::hub_heatmap(one, 2);
    CHECK(hm1.values.cols() == 1);
    CHECK(hm1.genes[0] == 2);
  }
  SUBCASE("constant predictions fall back to ascending gene id") {
    Matrix flat(2, 4, 0.25);
    bench::HubHeatmap hmf = bench::hub_heatmap(flat, 2);
    CHECK(hmf.genes == std::vector<int>{0, 1});
  }
  SUBCASE("empty series is rejected") {
    CHECK_THROWS_AS(bench::hub_heatmap(Matrix(), 2), Error);
  }
}

TEST_CASE("run_bench: report structure, outputs, and byte determinism") {
  std::vector<std::vector<graph::Edge>> per_t;
  for (int t = 0; t < 4; ++t) per_t.push_back(random_edges(8, 8, 300 + t));
  graph::TemporalGraph tg = make_tg(8, per_t, 71);

  config::RunConfig cfg = config::default_config();
  cfg.models.clear();
  {
    config::ModelEntry bank;
    bank.name = "edgebank";
    bank.cfg.family = models::Family::edgebank;
    config::ModelEntry lin;
    lin.name = "linear";
    lin.cfg.family = models::Family::linear;
    lin.cfg.hidden = 4;
    lin.cfg.dropout = 0.0;
    cfg.models = {bank, lin};
  }
  cfg.seeds = {0, 1};
  cfg.train.warmup_epochs = 2;
  cfg.train.finetune_epochs = 1;
  cfg.train.precision_k = 4;
  cfg.hub_top_n = 3;

  std::vector<bench::RunFragment> frags;
  nlohmann::ordered_json report = bench::run_bench(tg, cfg, &frags);

  CHECK(report["schema_version"] == bench::kReportSchemaVersion);
  CHECK(report["config_hash"] == config::config_hash(cfg));
  CHECK(report["dataset"]["num_genes"] == 8);
  CHECK(report["dataset"]["snapshots"] == 4);
  for (const char* task : {"link", "expression", "centrality"}) {
    REQUIRE(report["tasks"].contains(task));
    for (const char* m : {"edgebank", "linear"}) {
      REQUIRE(report["tasks"][task].contains(m));
      CHECK(report["tasks"][task][m]["seeds"].size() == 2);
      CHECK(report["tasks"][task][m]["seeds"][0]["steps"].size() == 2);
      CHECK(report["tasks"][task][m].contains("aggregate"));
    }
  }
  // 3 tasks x 2 models x 2 seeds fragments.
  CHECK(frags.size() == 12);

  // Byte-identical rerun.
  std::vector<bench::RunFragment> frags2;
  nlohmann::ordered_json report2 = bench::run_bench(tg, cfg, &frags2);
  CHECK(report.dump() == report2.dump());

  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "tgl_bench_test_out";
  std::filesystem::remove_all(dir);
  bench::write_outputs(report, dir);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "trend_link.csv"));
  CHECK(std::filesystem::exists(dir / "trend_expression.csv"));
  CHECK(std::filesystem::exists(dir / "trend_centrality.csv"));
  CHECK(std::filesystem::exists(dir / "hub_heatmap.csv"));

  std::ifstream trend(dir / "trend_link.csv");
  std::string header;
  std::getline(trend, header);
  CHECK(header == "step,edgebank,linear");
  int rows = 0;
  for (std::string line; std::getline(trend, line);) ++rows;
  CHECK(rows == 2);  // eval steps t=2,3

  std::ifstream hub(dir / "hub_heatmap.csv");
  std::getline(hub, header);
  CHECK(header == "gene,step_1,step_2");
  rows = 0;
  for (std::string line; std::getline(hub, line);) ++rows;
  CHECK(rows == 3);  // hub_top_n
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
