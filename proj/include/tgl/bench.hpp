#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tgl/graph.hpp"
#include "tgl/matrix.hpp"
#include "tgl/models.hpp"

namespace tgl::config {
struct RunConfig;
}

namespace tgl::bench {

inline constexpr int kReportSchemaVersion = 1;

enum class Task { link, expression, centrality };

Task task_from_string(const std::string& name);
const char* task_name(Task t);
const std::vector<Task>& all_tasks();

struct TrainParams {
  double lr = 1e-3;
  int warmup_epochs = 100;
  int finetune_epochs = 20;
  int t_warm = 2;        // warmup covers transitions within snapshots 1..t_warm
  double neg_ratio = 1.0;
  int precision_k = 200;
};

// Negative link sample for one snapshot: ordered non-edge pairs between
// active genes. exhausted=true means the feasible set was smaller than the
// request and was returned whole.
struct NegativeSample {
  std::vector<std::pair<int, int>> pairs;
  bool exhausted = false;
};

NegativeSample sample_negatives(const graph::Snapshot& snap, double neg_ratio,
                                std::uint64_t seed);

// Future expression-change target over genes active at both endpoints of
// the transition; delta[i] pairs with genes[i] and is taken on the
// mean-expression column of the node features.
struct ExprTarget {
  std::vector<int> genes;
  std::vector<double> delta;
};

ExprTarget expression_target(const graph::Snapshot& at_t,
                             const graph::Snapshot& at_next);

// Metrics for one evaluation step (predicting snapshot t+1 from history
// <= t). Fields that do not apply to the task, or could not be computed
// (degenerate step, divergence), hold NaN.
struct StepMetrics {
  int t = 0;
  bool diverged = false;
  int n_eval = 0;
  double auprc = std::numeric_limits<double>::quiet_NaN();
  double pcc = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  double p_at_k_up = std::numeric_limits<double>::quiet_NaN();
  double p_at_k_down = std::numeric_limits<double>::quiet_NaN();
  double p_at_k_top = std::numeric_limits<double>::quiet_NaN();
};

// Names of the metrics a task reports, in report order.
const std::vector<std::string>& task_metrics(Task t);
double metric_value(const StepMetrics& m, const std::string& name);

// One (model, task, seed) pass of the live-update protocol.
struct RunFragment {
  std::string model;
  Task task = Task::link;
  std::uint64_t seed_index = 0;
  std::string config_hash;
  std::vector<StepMetrics> steps;
  Matrix centrality_pred;  // steps x |V|, centrality task only
  bool negatives_exhausted = false;
  bool warmup_diverged = false;
};

RunFragment live_update_run(const graph::TemporalGraph& tg,
                            const models::ModelConfig& mcfg, Task task,
                            const TrainParams& tp, std::uint64_t seed);

// Across-seed aggregate of one metric: per-seed values are unweighted means
// over non-NaN steps; mean/std (sample, n-1) are over the non-NaN per-seed
// values. missing_steps counts NaN step entries across all seeds.
struct AggregateEntry {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  int seeds_used = 0;
  int missing_steps = 0;
};

// Keyed by task_metrics(task) order. Fragments must agree on model, task
// and config hash (ConfigMismatch otherwise).
std::vector<std::pair<std::string, AggregateEntry>> aggregate_report(
    const std::vector<RunFragment>& fragments);

// Temporal profiles of the top_n genes ranked by maximum predicted
// centrality over the steps; ties fall back to ascending gene id.
struct HubHeatmap {
  std::vector<int> genes;  // row order
  Matrix values;           // top_n x steps
};

HubHeatmap hub_heatmap(const Matrix& centrality_pred, int top_n);

// Full sweep over cfg.tasks x cfg.models x cfg.seeds. Returns the
// report.json document; fragments_out (optional) receives every fragment
// for CSV export.
nlohmann::ordered_json run_bench(const graph::TemporalGraph& tg,
                                 const config::RunConfig& cfg,
                                 std::vector<RunFragment>* fragments_out);

// Writes report.json, trend_<task>.csv per task, and hub_heatmap.csv (when
// the report carries one) into out_dir. Reads only the report document, so
// a stored report.json can regenerate its CSVs.
void write_outputs(const nlohmann::ordered_json& report,
                   const std::filesystem::path& out_dir);

}  // namespace tgl::bench
