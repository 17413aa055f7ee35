#include "tgl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "io_util.hpp"
#include "tgl/autodiff.hpp"
#include "tgl/config.hpp"
#include "tgl/errors.hpp"
#include "tgl/metrics.hpp"
#include "tgl/rng.hpp"

namespace tgl::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Task task_from_string(const std::string& name) {
  if (name == "link") return Task::link;
  if (name == "expression") return Task::expression;
  if (name == "centrality") return Task::centrality;
  fail(Errc::config_error, "unknown task \"" + name + "\"");
}

const char* task_name(Task t) {
  switch (t) {
    case Task::link: return "link";
    case Task::expression: return "expression";
    case Task::centrality: return "centrality";
  }
  return "?";
}

const std::vector<Task>& all_tasks() {
  static const std::vector<Task> tasks = {Task::link, Task::expression,
                                          Task::centrality};
  return tasks;
}

const std::vector<std::string>& task_metrics(Task t) {
  static const std::vector<std::string> link = {"auprc"};
  static const std::vector<std::string> expr = {"pcc", "mae", "spearman",
                                                "p_at_k_up", "p_at_k_down"};
  static const std::vector<std::string> cent = {"pcc", "mae", "spearman",
                                                "p_at_k_top"};
  switch (t) {
    case Task::link: return link;
    case Task::expression: return expr;
    case Task::centrality: return cent;
  }
  return link;
}

double metric_value(const StepMetrics& m, const std::string& name) {
  if (name == "auprc") return m.auprc;
  if (name == "pcc") return m.pcc;
  if (name == "mae") return m.mae;
  if (name == "spearman") return m.spearman;
  if (name == "p_at_k_up") return m.p_at_k_up;
  if (name == "p_at_k_down") return m.p_at_k_down;
  if (name == "p_at_k_top") return m.p_at_k_top;
  fail(Errc::config_error, "unknown metric \"" + name + "\"");
}

NegativeSample sample_negatives(const graph::Snapshot& snap, double neg_ratio,
                                std::uint64_t seed) {
  if (!(neg_ratio > 0.0) || !std::isfinite(neg_ratio)) {
    fail(Errc::config_error, "neg_ratio must be positive and finite");
  }
  std::vector<int> active;
  for (std::size_t i = 0; i < snap.active_mask.size(); ++i) {
    if (snap.active_mask[i]) active.push_back(static_cast<int>(i));
  }
  std::unordered_set<std::uint64_t> present;
  present.reserve(snap.edges.size() * 2);
  for (const graph::Edge& e : snap.edges) {
    present.insert(graph::pair_key(e.src, e.dst));
  }

  std::vector<std::pair<int, int>> feasible;
  for (int i : active) {
    for (int j : active) {
      if (i == j) continue;
      if (!present.count(graph::pair_key(i, j))) feasible.emplace_back(i, j);
    }
  }
  if (feasible.empty()) {
    fail(Errc::no_negatives_available,
         "snapshot " + std::to_string(snap.t) +
             ": every ordered pair of active genes is an edge");
  }

  const auto requested = static_cast<std::size_t>(
      std::llround(neg_ratio * static_cast<double>(snap.edges.size())));
  NegativeSample out;
  if (feasible.size() <= requested) {
    out.pairs = std::move(feasible);
    out.exhausted = true;
    return out;
  }
  rng::Rng rng(seed);
  for (std::size_t i = 0; i < requested; ++i) {
    const std::size_t j = i + rng.below(feasible.size() - i);
    std::swap(feasible[i], feasible[j]);
  }
  feasible.resize(requested);
  out.pairs = std::move(feasible);
  return out;
}

ExprTarget expression_target(const graph::Snapshot& at_t,
                             const graph::Snapshot& at_next) {
  if (at_t.active_mask.size() != at_next.active_mask.size() ||
      at_t.node_features.rows() != at_next.node_features.rows()) {
    fail(Errc::shape_mismatch, "expression_target: snapshots disagree on |V|");
  }
  ExprTarget out;
  for (std::size_t i = 0; i < at_t.active_mask.size(); ++i) {
    if (at_t.active_mask[i] && at_next.active_mask[i]) {
      const int gi = static_cast<int>(i);
      out.genes.push_back(gi);
      out.delta.push_back(at_next.node_features(gi, 0) - at_t.node_features(gi, 0));
    }
  }
  return out;
}

namespace {

// Positive pairs from E^(t+1) followed by sampled negatives, with 1/0 labels.
struct LinkBatch {
  std::vector<int> src, dst;
  Matrix labels;  // n x 1
  std::size_t n_pos = 0;
  bool exhausted = false;
};

LinkBatch build_link_batch(const graph::Snapshot& next, double neg_ratio,
                           std::uint64_t seed) {
  LinkBatch b;
  b.n_pos = next.edges.size();
  for (const graph::Edge& e : next.edges) {
    b.src.push_back(e.src);
    b.dst.push_back(e.dst);
  }
  NegativeSample neg = sample_negatives(next, neg_ratio, seed);
  b.exhausted = neg.exhausted;
  for (const auto& [s, d] : neg.pairs) {
    b.src.push_back(s);
    b.dst.push_back(d);
  }
  b.labels = Matrix(static_cast<int>(b.src.size()), 1);
  for (std::size_t i = 0; i < b.n_pos; ++i) b.labels(static_cast<int>(i), 0) = 1.0;
  return b;
}

std::vector<double> column(const Matrix& m, const std::vector<int>& rows) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (int r : rows) v.push_back(m(r, 0));
  return v;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Shared scaffolding for one (model, task, seed) run.
struct Runner {
  const graph::TemporalGraph& tg;
  Task task;
  const TrainParams& tp;
  std::uint64_t seed;
  models::Model model;
  nn::Adam opt;
  RunFragment frag;

  Runner(const graph::TemporalGraph& tg_, const models::ModelConfig& mcfg,
         Task task_, const TrainParams& tp_, std::uint64_t seed_)
      : tg(tg_),
        task(task_),
        tp(tp_),
        seed(seed_),
        model(mcfg, tg_.num_genes(),
              static_cast<int>(tg_.snapshots.front().node_features.cols()),
              rng::derive_seed(seed_, "model")),
        opt(tp_.lr) {
    if (model.learned()) opt.register_params(model.params());
    frag.model = models::family_name(mcfg.family);
    frag.task = task;
  }

  const graph::Snapshot& snap(int t) const { return tg.snapshots[t - 1]; }

  // Training loss for the transition t -> t+1, or null when the transition
  // carries nothing to fit (no positives, too few evaluable genes).
  nn::Tensor transition_loss(int t, std::uint64_t batch_seed, bool training) {
    const graph::Snapshot& next = snap(t + 1);
    nn::Tensor h = model.encode(snap(t), training);
    switch (task) {
      case Task::link: {
        if (next.edges.empty()) return nullptr;
        LinkBatch b;
        try {
          b = build_link_batch(next, tp.neg_ratio, batch_seed);
        } catch (const Error& e) {
          if (e.code() != Errc::no_negatives_available) throw;
          return nullptr;  // saturated transition, nothing to contrast
        }
        frag.negatives_exhausted |= b.exhausted;
        if (b.src.size() == b.n_pos) return nullptr;
        return nn::bce_with_logits(model.link_logits(h, b.src, b.dst), b.labels);
      }
      case Task::expression: {
        ExprTarget et = expression_target(snap(t), next);
        if (et.genes.size() < 2) return nullptr;
        Matrix target(static_cast<int>(et.delta.size()), 1);
        for (std::size_t i = 0; i < et.delta.size(); ++i) {
          target(static_cast<int>(i), 0) = et.delta[i];
        }
        nn::Tensor pred = nn::gather_rows(
            model.node_scores(h), std::make_shared<std::vector<int>>(et.genes));
        return nn::mse(pred, target);
      }
      case Task::centrality: {
        std::vector<double> c = graph::out_degree_centrality(next, tg.num_genes());
        Matrix target(tg.num_genes(), 1);
        for (int i = 0; i < tg.num_genes(); ++i) target(i, 0) = c[i];
        return nn::mse(model.node_scores(h), target);
      }
    }
    return nullptr;
  }

  void train_step(int t, std::uint64_t batch_seed) {
    opt.zero_grad();
    nn::Tensor loss = transition_loss(t, batch_seed, true);
    if (!loss) return;
    nn::backward(loss);
    opt.step();
  }

  // Replays the warmup transitions from a fresh state, training on each.
  void warmup() {
    const int last = tp.t_warm - 1;  // final warmup transition is last -> last+1
    if (!model.learned() || tp.warmup_epochs == 0) {
      model.reset_state();
      for (int t = 1; t <= last; ++t) model.advance(snap(t));
      return;
    }
    for (int epoch = 0; epoch < tp.warmup_epochs; ++epoch) {
      const std::vector<Matrix> params_ckpt = model.params().snapshot_values();
      const nn::Adam::Moments moments_ckpt = opt.snapshot();
      try {
        model.reset_state();
        for (int t = 1; t <= last; ++t) {
          train_step(t, rng::derive_seed(seed, "neg/warm/" + std::to_string(epoch) +
                                                   "/" + std::to_string(t)));
          model.advance(snap(t));
        }
      } catch (const Error& e) {
        if (e.code() != Errc::numerical_error) throw;
        model.params().restore_values(params_ckpt);
        opt.restore(moments_ckpt);
        model.reset_state();
        for (int t = 1; t <= last; ++t) model.advance(snap(t));
        frag.warmup_diverged = true;
        return;
      }
    }
  }

  // Frozen-model predictions for the step t -> t+1, written into sm and,
  // for the centrality task, into the given heatmap row.
  void evaluate(int t, StepMetrics& sm, std::vector<double>* heat_row) {
    const graph::Snapshot& cur = snap(t);
    const graph::Snapshot& next = snap(t + 1);

    nn::Tensor h;
    if (model.learned()) {
      try {
        h = model.encode(cur, false);
      } catch (const Error& e) {
        if (e.code() != Errc::numerical_error) throw;
        sm.diverged = true;
        return;
      }
    }

    switch (task) {
      case Task::link: {
        if (next.edges.empty()) return;
        LinkBatch b;
        try {
          b = build_link_batch(next, tp.neg_ratio,
                               rng::derive_seed(seed, "neg/eval/" + std::to_string(t)));
        } catch (const Error& e) {
          if (e.code() != Errc::no_negatives_available) throw;
          return;  // saturated graph, nothing to rank against
        }
        frag.negatives_exhausted |= b.exhausted;
        if (b.src.size() == b.n_pos) return;
        std::vector<double> scores;
        if (model.learned()) {
          // auprc only needs the ranking, so raw logits work as scores.
          nn::Tensor logits = model.link_logits(h, b.src, b.dst);
          scores.reserve(b.src.size());
          for (int i = 0; i < logits->value.rows(); ++i) {
            scores.push_back(logits->value(i, 0));
          }
        } else {
          for (std::size_t i = 0; i < b.src.size(); ++i) {
            scores.push_back(model.edgebank_score(b.src[i], b.dst[i]));
          }
        }
        std::vector<int> labels(scores.size(), 0);
        for (std::size_t i = 0; i < b.n_pos; ++i) labels[i] = 1;
        sm.n_eval = static_cast<int>(scores.size());
        sm.auprc = metrics::auprc(scores, labels);
        break;
      }
      case Task::expression: {
        ExprTarget et = expression_target(cur, next);
        sm.n_eval = static_cast<int>(et.genes.size());
        if (et.genes.size() < 2) return;
        std::vector<double> pred;
        if (model.learned()) {
          pred = column(model.node_scores(h)->value, et.genes);
        } else {
          pred.assign(et.genes.size(), 0.0);  // edgebank has no expression head
        }
        metrics::RegressionMetrics rm = metrics::regression_metrics(pred, et.delta);
        sm.pcc = rm.pcc;
        sm.mae = rm.mae;
        sm.spearman = rm.spearman;
        sm.p_at_k_up = metrics::precision_at_k(pred, et.delta, tp.precision_k,
                                               metrics::Direction::up);
        sm.p_at_k_down = metrics::precision_at_k(pred, et.delta, tp.precision_k,
                                                 metrics::Direction::down);
        break;
      }
      case Task::centrality: {
        std::vector<double> target = graph::out_degree_centrality(next, tg.num_genes());
        std::vector<double> pred;
        if (model.learned()) {
          pred = column(model.node_scores(h)->value,
                        [&] {
                          std::vector<int> all(tg.num_genes());
                          for (int i = 0; i < tg.num_genes(); ++i) all[i] = i;
                          return all;
                        }());
        } else {
          pred = model.edgebank_centrality();
        }
        for (double& v : pred) v = clamp01(v);
        if (heat_row) *heat_row = pred;
        sm.n_eval = static_cast<int>(pred.size());
        if (pred.size() < 2) return;
        metrics::RegressionMetrics rm = metrics::regression_metrics(pred, target);
        sm.pcc = rm.pcc;
        sm.mae = rm.mae;
        sm.spearman = rm.spearman;
        sm.p_at_k_top = metrics::precision_at_k(pred, target, tp.precision_k,
                                                metrics::Direction::top);
        break;
      }
    }
  }

  void finetune(int t, StepMetrics& sm) {
    if (!model.learned() || tp.finetune_epochs == 0) return;
    const std::vector<Matrix> params_ckpt = model.params().snapshot_values();
    const nn::Adam::Moments moments_ckpt = opt.snapshot();
    try {
      for (int epoch = 0; epoch < tp.finetune_epochs; ++epoch) {
        train_step(t, rng::derive_seed(seed, "neg/ft/" + std::to_string(t) + "/" +
                                                 std::to_string(epoch)));
      }
    } catch (const Error& e) {
      if (e.code() != Errc::numerical_error) throw;
      model.params().restore_values(params_ckpt);
      opt.restore(moments_ckpt);
      sm.diverged = true;
    }
  }

  void run() {
    warmup();
    const int T = tg.T();
    std::vector<std::vector<double>> heat;
    for (int t = tp.t_warm; t <= T - 1; ++t) {
      StepMetrics sm;
      sm.t = t;
      std::vector<double> heat_row(static_cast<std::size_t>(tg.num_genes()), kNaN);
      if (!model.learned()) {
        // Memory models fold snapshot t in before scoring; E^(t) is part of
        // the history the protocol allows at this step.
        model.advance(snap(t));
        evaluate(t, sm, task == Task::centrality ? &heat_row : nullptr);
      } else {
        evaluate(t, sm, task == Task::centrality ? &heat_row : nullptr);
        finetune(t, sm);
        try {
          model.advance(snap(t));
        } catch (const Error& e) {
          if (e.code() != Errc::numerical_error) throw;
          sm.diverged = true;  // state kept as-is, run continues
        }
      }
      if (task == Task::centrality) heat.push_back(std::move(heat_row));
      frag.steps.push_back(sm);
    }
    if (task == Task::centrality) {
      frag.centrality_pred = Matrix(static_cast<int>(heat.size()), tg.num_genes());
      for (std::size_t s = 0; s < heat.size(); ++s) {
        for (int g = 0; g < tg.num_genes(); ++g) {
          frag.centrality_pred(static_cast<int>(s), g) = heat[s][g];
        }
      }
    }
  }
};

}  // namespace

RunFragment live_update_run(const graph::TemporalGraph& tg,
                            const models::ModelConfig& mcfg, Task task,
                            const TrainParams& tp, std::uint64_t seed) {
  mcfg.validate();
  if (!(tp.lr > 0.0) || tp.warmup_epochs < 0 || tp.finetune_epochs < 0 ||
      !(tp.neg_ratio > 0.0) || tp.precision_k < 1) {
    fail(Errc::config_error, "invalid train params");
  }
  if (tp.t_warm < 2) fail(Errc::config_error, "t_warm must be >= 2");
  if (tg.T() < 3) {
    fail(Errc::too_few_snapshots,
         "live-update protocol needs T >= 3, got " + std::to_string(tg.T()));
  }
  if (tp.t_warm > tg.T() - 1) {
    fail(Errc::too_few_snapshots,
         "t_warm=" + std::to_string(tp.t_warm) + " leaves no evaluation steps for T=" +
             std::to_string(tg.T()));
  }
  Runner r(tg, mcfg, task, tp, seed);
  r.frag.seed_index = seed;
  r.run();
  return r.frag;
}

std::vector<std::pair<std::string, AggregateEntry>> aggregate_report(
    const std::vector<RunFragment>& fragments) {
  if (fragments.empty()) {
    fail(Errc::empty_input, "aggregate_report: no fragments");
  }
  const RunFragment& head = fragments.front();
  for (const RunFragment& f : fragments) {
    if (f.model != head.model || f.task != head.task ||
        f.config_hash != head.config_hash) {
      fail(Errc::config_mismatch,
           "aggregate_report: fragment (" + f.model + ", " + task_name(f.task) +
               ", " + f.config_hash + ") does not match (" + head.model + ", " +
               task_name(head.task) + ", " + head.config_hash + ")");
    }
  }

  std::vector<std::pair<std::string, AggregateEntry>> out;
  for (const std::string& name : task_metrics(head.task)) {
    AggregateEntry agg;
    std::vector<double> per_seed;
    for (const RunFragment& f : fragments) {
      double sum = 0.0;
      int n = 0;
      for (const StepMetrics& sm : f.steps) {
        const double v = metric_value(sm, name);
        if (std::isnan(v)) {
          ++agg.missing_steps;
        } else {
          sum += v;
          ++n;
        }
      }
      if (n > 0) per_seed.push_back(sum / n);
    }
    agg.seeds_used = static_cast<int>(per_seed.size());
    if (!per_seed.empty()) {
      double m = 0.0;
      for (double v : per_seed) m += v;
      m /= static_cast<double>(per_seed.size());
      agg.mean = m;
      if (per_seed.size() == 1) {
        agg.stddev = 0.0;
      } else {
        double ss = 0.0;
        for (double v : per_seed) ss += (v - m) * (v - m);
        agg.stddev = std::sqrt(ss / static_cast<double>(per_seed.size() - 1));
      }
    }
    out.emplace_back(name, agg);
  }
  return out;
}

HubHeatmap hub_heatmap(const Matrix& centrality_pred, int top_n) {
  if (centrality_pred.rows() == 0 || centrality_pred.cols() == 0) {
    fail(Errc::empty_series, "hub_heatmap: no prediction steps");
  }
  if (top_n < 1) fail(Errc::config_error, "hub_heatmap: top_n must be >= 1");

  const int steps = centrality_pred.rows();
  const int genes = centrality_pred.cols();
  std::vector<double> peak(genes, -std::numeric_limits<double>::infinity());
  for (int g = 0; g < genes; ++g) {
    for (int s = 0; s < steps; ++s) {
      const double v = centrality_pred(s, g);
      if (!std::isnan(v)) peak[g] = std::max(peak[g], v);
    }
  }
  std::vector<int> order(genes);
  for (int g = 0; g < genes; ++g) order[g] = g;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (peak[a] != peak[b]) return peak[a] > peak[b];
    return a < b;
  });
  order.resize(std::min(genes, top_n));

  HubHeatmap hm;
  hm.genes = order;
  hm.values = Matrix(static_cast<int>(order.size()), steps);
  for (std::size_t r = 0; r < order.size(); ++r) {
    for (int s = 0; s < steps; ++s) {
      hm.values(static_cast<int>(r), s) = centrality_pred(s, order[r]);
    }
  }
  return hm;
}

namespace {

nlohmann::ordered_json json_double(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

nlohmann::ordered_json step_to_json(Task task, const StepMetrics& sm) {
  nlohmann::ordered_json j;
  j["t"] = sm.t;
  for (const std::string& name : task_metrics(task)) {
    j[name] = json_double(metric_value(sm, name));
  }
  j["n_eval"] = sm.n_eval;
  j["diverged"] = sm.diverged;
  return j;
}

const char* primary_metric(Task t) {
  return t == Task::link ? "auprc" : "pcc";
}

std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  return tgl::detail::fmt_double(v.get<double>());
}

}  // namespace

nlohmann::ordered_json run_bench(const graph::TemporalGraph& tg,
                                 const config::RunConfig& cfg,
                                 std::vector<RunFragment>* fragments_out) {
  config::validate(cfg);
  const config::RunConfig canon = config::canonical(cfg);
  const std::string hash = config::config_hash(canon);

  nlohmann::ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["config_hash"] = hash;
  report["config"] = config::to_json(canon);
  report["dataset"] = {
      {"num_genes", tg.num_genes()},
      {"snapshots", tg.T()},
      {"feature_width",
       tg.snapshots.empty() ? 0 : static_cast<int>(tg.snapshots.front().node_features.cols())}};

  const graph::RecurrenceSeries rec = graph::recurrence_stats(tg);
  nlohmann::ordered_json recj;
  recj["average"] = json_double(rec.average);
  recj["t"] = nlohmann::ordered_json::array();
  recj["recurrent_fraction"] = nlohmann::ordered_json::array();
  recj["new_fraction"] = nlohmann::ordered_json::array();
  for (const graph::RecurrencePoint& p : rec.per_snapshot) {
    recj["t"].push_back(p.t);
    recj["recurrent_fraction"].push_back(json_double(p.recurrent_fraction));
    recj["new_fraction"].push_back(json_double(p.new_fraction));
  }
  report["recurrence"] = recj;

  std::vector<RunFragment> all_frags;
  nlohmann::ordered_json tasks_json;
  for (Task task : cfg.tasks) {
    nlohmann::ordered_json models_json;
    for (const config::ModelEntry& entry : cfg.models) {
      std::vector<RunFragment> frags;
      for (int sidx : cfg.seeds) {
        const std::uint64_t run_seed = rng::derive_seed(
            cfg.seed, "bench/" + entry.name + "/" + std::to_string(sidx));
        RunFragment f = live_update_run(tg, entry.cfg, task, cfg.train, run_seed);
        f.model = entry.name;
        f.seed_index = static_cast<std::uint64_t>(sidx);
        f.config_hash = hash;
        frags.push_back(std::move(f));
      }

      nlohmann::ordered_json mj;
      mj["seeds"] = nlohmann::ordered_json::array();
      for (const RunFragment& f : frags) {
        nlohmann::ordered_json sj;
        sj["seed_index"] = f.seed_index;
        sj["warmup_diverged"] = f.warmup_diverged;
        sj["negatives_exhausted"] = f.negatives_exhausted;
        sj["steps"] = nlohmann::ordered_json::array();
        for (const StepMetrics& sm : f.steps) {
          sj["steps"].push_back(step_to_json(task, sm));
        }
        mj["seeds"].push_back(sj);
      }
      nlohmann::ordered_json aggj;
      for (const auto& [name, agg] : aggregate_report(frags)) {
        aggj[name] = {{"mean", json_double(agg.mean)},
                      {"std", json_double(agg.stddev)},
                      {"seeds_used", agg.seeds_used},
                      {"missing_steps", agg.missing_steps}};
      }
      mj["aggregate"] = aggj;
      models_json[entry.name] = mj;

      for (RunFragment& f : frags) all_frags.push_back(std::move(f));
    }
    tasks_json[task_name(task)] = models_json;
  }
  report["tasks"] = tasks_json;

  // Plot-data series, embedded so report.json alone can regenerate every
  // CSV (the report subcommand relies on this).
  nlohmann::ordered_json plots;
  nlohmann::ordered_json trend;
  for (Task task : cfg.tasks) {
    nlohmann::ordered_json tj;
    std::vector<int> steps;
    for (const RunFragment& f : all_frags) {
      if (f.task == task) {
        for (const StepMetrics& sm : f.steps) steps.push_back(sm.t);
        break;
      }
    }
    tj["metric"] = primary_metric(task);
    tj["step"] = steps;
    tj["models"] = nlohmann::ordered_json::object();
    for (const config::ModelEntry& e : cfg.models) {
      nlohmann::ordered_json series = nlohmann::ordered_json::array();
      for (std::size_t si = 0; si < steps.size(); ++si) {
        double sum = 0.0;
        int n = 0;
        for (const RunFragment& f : all_frags) {
          if (f.task != task || f.model != e.name || si >= f.steps.size()) continue;
          const double v = metric_value(f.steps[si], primary_metric(task));
          if (!std::isnan(v)) {
            sum += v;
            ++n;
          }
        }
        series.push_back(n > 0 ? nlohmann::ordered_json(sum / n)
                               : nlohmann::ordered_json(nullptr));
      }
      tj["models"][e.name] = series;
    }
    trend[task_name(task)] = tj;
  }
  plots["trend"] = trend;

  // Heatmap source: first configured model, lowest seed index. A fixed,
  // documented rule rather than "best model", so reruns with extra models
  // never silently change the figure data.
  const RunFragment* source = nullptr;
  for (const RunFragment& f : all_frags) {
    if (f.task != Task::centrality || f.model != cfg.models.front().name) continue;
    if (!source || f.seed_index < source->seed_index) source = &f;
  }
  if (source && source->centrality_pred.rows() > 0) {
    HubHeatmap hm = hub_heatmap(source->centrality_pred, cfg.hub_top_n);
    nlohmann::ordered_json hj;
    hj["model"] = source->model;
    hj["seed_index"] = source->seed_index;
    hj["genes"] = nlohmann::ordered_json::array();
    for (int g : hm.genes) hj["genes"].push_back(tg.vocab.symbol(g));
    hj["values"] = nlohmann::ordered_json::array();
    for (int r = 0; r < hm.values.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int s = 0; s < hm.values.cols(); ++s) {
        row.push_back(json_double(hm.values(r, s)));
      }
      hj["values"].push_back(row);
    }
    plots["hub_heatmap"] = hj;
  }
  report["plots"] = plots;

  if (fragments_out) *fragments_out = std::move(all_frags);
  return report;
}

void write_outputs(const nlohmann::ordered_json& report,
                   const std::filesystem::path& out_dir) {
  if (!report.contains("plots") || !report["plots"].contains("trend")) {
    fail(Errc::schema_mismatch, "report lacks the plots.trend section");
  }
  std::filesystem::create_directories(out_dir);
  tgl::detail::write_file(out_dir / "report.json", report.dump(2) + "\n");

  for (const auto& [task, tj] : report["plots"]["trend"].items()) {
    std::string csv = "step";
    for (const auto& [model, series] : tj.at("models").items()) {
      (void)series;
      csv += "," + model;
    }
    csv += "\n";
    const auto& steps = tj.at("step");
    for (std::size_t si = 0; si < steps.size(); ++si) {
      csv += std::to_string(steps[si].get<int>());
      for (const auto& [model, series] : tj.at("models").items()) {
        (void)model;
        csv += "," + csv_cell(series.at(si));
      }
      csv += "\n";
    }
    tgl::detail::write_file(out_dir / ("trend_" + task + ".csv"), csv);
  }

  if (report["plots"].contains("hub_heatmap")) {
    const auto& hj = report["plots"]["hub_heatmap"];
    const auto& genes = hj.at("genes");
    const auto& values = hj.at("values");
    const std::size_t steps = values.empty() ? 0 : values.at(0).size();
    std::string csv = "gene";
    for (std::size_t s = 0; s < steps; ++s) {
      csv += ",step_" + std::to_string(s + 1);
    }
    csv += "\n";
    for (std::size_t r = 0; r < genes.size(); ++r) {
      csv += genes.at(r).get<std::string>();
      for (std::size_t s = 0; s < steps; ++s) {
        csv += "," + csv_cell(values.at(r).at(s));
      }
      csv += "\n";
    }
    tgl::detail::write_file(out_dir / "hub_heatmap.csv", csv);
  }
}

}  // namespace tgl::bench
