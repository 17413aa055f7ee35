// Pipeline driver: expression counts -> pseudotime -> snapshots -> GRNs ->
// temporal graph -> forecasting benchmark. Every stage writes a manifest
// with input checksums, so re-running with unchanged inputs is a no-op.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "io_util.hpp"
#include "json.hpp"
#include "tgl/bench.hpp"
#include "tgl/bundle.hpp"
#include "tgl/config.hpp"
#include "tgl/errors.hpp"
#include "tgl/graph.hpp"
#include "tgl/grn.hpp"
#include "tgl/ingest.hpp"
#include "tgl/models.hpp"
#include "tgl/rng.hpp"
#include "tgl/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tgl;

namespace {

constexpr int kManifestVersion = 1;

struct GlobalOpts {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool dry_run = false;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string file_checksum(const fs::path& p) {
  return hex64(rng::fnv1a(detail::read_file(p)));
}

std::string params_checksum(const nlohmann::ordered_json& j) {
  return hex64(rng::fnv1a(j.dump()));
}

config::RunConfig resolve_config(const GlobalOpts& g) {
  config::RunConfig cfg = g.config_path.empty() ? config::default_config()
                                                : config::load_file(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
  config::validate(cfg);
  return cfg;
}

// TGL_OUTPUT_ROOT anchors relative output directories, so batch systems can
// redirect a whole pipeline without editing configs.
fs::path resolve_out_dir(const config::RunConfig& cfg) {
  fs::path out = cfg.output_dir;
  if (const char* root = std::getenv("TGL_OUTPUT_ROOT"); root && *root) {
    if (out.is_relative()) out = fs::path(root) / out;
  }
  return out;
}

fs::path manifest_path(const fs::path& out, const std::string& stage) {
  return out / ("stage_" + stage + ".json");
}

bool stage_up_to_date(const fs::path& out, const std::string& stage,
                      const std::map<std::string, std::string>& inputs,
                      const std::string& params,
                      const std::vector<std::string>& outputs) {
  const fs::path mp = manifest_path(out, stage);
  if (!fs::exists(mp)) return false;
  json m;
  try {
    m = json::parse(detail::read_file(mp));
  } catch (...) {
    return false;
  }
  if (!m.is_object() || m.value("schema_version", 0) != kManifestVersion ||
      m.value("stage", "") != stage || m.value("params", "") != params) {
    return false;
  }
  if (!m.contains("inputs") || m["inputs"].size() != inputs.size()) return false;
  for (const auto& [label, sum] : inputs) {
    if (!m["inputs"].contains(label) || m["inputs"][label] != sum) return false;
  }
  for (const std::string& o : outputs) {
    if (!fs::exists(out / o)) return false;
  }
  return true;
}

void write_stage_manifest(const fs::path& out, const std::string& stage,
                          const std::map<std::string, std::string>& inputs,
                          const std::string& params,
                          const std::vector<std::string>& outputs,
                          const nlohmann::ordered_json& notes) {
  nlohmann::ordered_json m;
  m["stage"] = stage;
  m["schema_version"] = kManifestVersion;
  m["inputs"] = inputs;
  m["params"] = params;
  m["outputs"] = outputs;
  m["notes"] = notes;
  detail::write_file(manifest_path(out, stage), m.dump(2) + "\n");
}

void log_line(const std::string& stage, const std::string& msg) {
  std::cout << "[" << stage << "] " << msg << "\n";
}

ingest::ExpressionFormat detect_format(const fs::path& p, const std::string& flag) {
  if (flag == "csv") return ingest::ExpressionFormat::dense_csv;
  if (flag == "mtx") return ingest::ExpressionFormat::matrix_market;
  return p.extension() == ".mtx" ? ingest::ExpressionFormat::matrix_market
                                 : ingest::ExpressionFormat::dense_csv;
}

struct DataFlags {
  std::string expression;
  std::string format = "auto";
  std::string regulators;
  std::string embeddings;
  std::string bundle;
};

fs::path required_path(const std::string& flag_value, const std::string& cfg_value,
                       const char* what) {
  const std::string& v = flag_value.empty() ? cfg_value : flag_value;
  if (v.empty()) {
    fail(Errc::config_error,
         std::string(what) + " path missing: set it in the config's data section "
                             "or pass the flag");
  }
  if (!fs::exists(v)) {
    fail(Errc::io_failure, std::string(what) + " not found: " + v);
  }
  return v;
}

ingest::ExpressionMatrix load_expr(const DataFlags& d, const config::RunConfig& cfg) {
  const fs::path p = required_path(d.expression, cfg.expression, "expression table");
  return ingest::load_expression(p, detect_format(p, d.format));
}

// ---------------------------------------------------------------- stages

void cmd_ingest(const config::RunConfig& cfg, const DataFlags& d, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = required_path(d.expression, cfg.expression, "expression table");
  if (dry) {
    log_line("ingest", "dry-run: would validate " + src.string());
    return;
  }
  fs::create_directories(out);
  const std::map<std::string, std::string> inputs = {{"expression", file_checksum(src)}};
  const std::string params = params_checksum({{"format", d.format}});
  if (stage_up_to_date(out, "ingest", inputs, params, {})) {
    log_line("ingest", "up to date, nothing to do");
    return;
  }
  ingest::ExpressionMatrix expr = load_expr(d, cfg);
  std::size_t nnz = 0;
  for (int g = 0; g < expr.n_genes(); ++g) nnz += expr.row(g).size();
  log_line("ingest", "genes: " + std::to_string(expr.n_genes()) +
                         ", cells: " + std::to_string(expr.n_cells()) +
                         ", nonzeros: " + std::to_string(nnz));
  write_stage_manifest(out, "ingest", inputs, params, {},
                       {{"genes", expr.n_genes()},
                        {"cells", expr.n_cells()},
                        {"nonzeros", nnz}});
}

void cmd_pseudotime(const config::RunConfig& cfg, const DataFlags& d, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = required_path(d.expression, cfg.expression, "expression table");
  if (dry) {
    log_line("pseudotime", "dry-run: would order cells from " + src.string());
    return;
  }
  fs::create_directories(out);
  const std::map<std::string, std::string> inputs = {{"expression", file_checksum(src)}};
  const std::string params = params_checksum({{"k", cfg.knn_k},
                                              {"n_pcs", cfg.n_pcs},
                                              {"m", cfg.dpt_m},
                                              {"root", cfg.root},
                                              {"format", d.format}});
  if (stage_up_to_date(out, "pseudotime", inputs, params, {"pseudotime.csv"})) {
    log_line("pseudotime", "up to date, nothing to do");
    return;
  }

  ingest::ExpressionMatrix expr = load_expr(d, cfg);
  trajectory::PreprocessResult pre = trajectory::preprocess(expr, cfg.n_pcs);
  if (pre.rank_reduced) {
    log_line("pseudotime", "data rank kept only " + std::to_string(pre.n_components) +
                               " of " + std::to_string(cfg.n_pcs) + " components");
  }
  Csr aff = trajectory::knn_affinity(pre.embedding, cfg.knn_k);
  int root = cfg.root;
  if (root >= expr.n_cells()) {
    fail(Errc::config_error, "root cell " + std::to_string(root) +
                                 " out of range for " +
                                 std::to_string(expr.n_cells()) + " cells");
  }
  if (root < 0) {
    root = trajectory::select_root(aff);
    log_line("pseudotime", "root cell " + std::to_string(root) + " (" +
                               expr.cells()[root] + "), auto-selected");
  } else {
    log_line("pseudotime",
             "root cell " + std::to_string(root) + " (" + expr.cells()[root] +
                 "), from config");
  }
  trajectory::PseudotimeAssignment pt =
      trajectory::diffusion_pseudotime(aff, root, cfg.dpt_m);
  if (pt.outside_component > 0) {
    log_line("pseudotime", std::to_string(pt.outside_component) +
                               " cells unreachable from the root, pinned to 1");
  }

  std::string csv = "cell,pseudotime\n";
  for (std::size_t c = 0; c < pt.pseudotime.size(); ++c) {
    csv += expr.cells()[c] + "," + detail::fmt_double(pt.pseudotime[c]) + "\n";
  }
  detail::write_file(out / "pseudotime.csv", csv);
  write_stage_manifest(out, "pseudotime", inputs, params, {"pseudotime.csv"},
                       {{"root_cell", root},
                        {"root_label", expr.cells()[root]},
                        {"outside_component", pt.outside_component}});
  log_line("pseudotime", "wrote " + (out / "pseudotime.csv").string());
}

std::vector<double> read_pseudotime_column(const fs::path& p) {
  const std::string text = detail::read_file(p);
  std::vector<double> values;
  bool header = true;
  for (std::string_view line : detail::split_lines(text)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) {
      fail(Errc::parse_error, "pseudotime.csv: expected 2 fields, got " +
                                  std::to_string(fields.size()));
    }
    values.push_back(detail::parse_double(fields[1], "pseudotime"));
  }
  if (values.empty()) fail(Errc::empty_input, "pseudotime.csv has no rows");
  return values;
}

void cmd_bin(const config::RunConfig& cfg, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path pt_file = out / "pseudotime.csv";
  if (dry) {
    log_line("bin", "dry-run: would bin cells from " + pt_file.string());
    return;
  }
  if (!fs::exists(pt_file)) {
    fail(Errc::io_failure,
         "pseudotime.csv not found in " + out.string() + "; run pseudotime first");
  }
  const std::map<std::string, std::string> inputs = {
      {"pseudotime", file_checksum(pt_file)}};
  const std::string params = params_checksum(
      {{"min_cells", cfg.min_cells}, {"target_bins", cfg.target_bins}});
  if (stage_up_to_date(out, "bin", inputs, params, {"bins.csv"})) {
    log_line("bin", "up to date, nothing to do");
    return;
  }

  trajectory::PseudotimeAssignment pt;
  pt.pseudotime = read_pseudotime_column(pt_file);
  trajectory::BinAssignment bins =
      trajectory::bin_cells(pt, cfg.min_cells, cfg.target_bins);

  std::string csv = "cell_index,bin\n";
  for (std::size_t c = 0; c < bins.bin_of_cell.size(); ++c) {
    csv += std::to_string(c) + "," + std::to_string(bins.bin_of_cell[c]) + "\n";
  }
  detail::write_file(out / "bins.csv", csv);

  std::string sizes;
  for (int c : bins.counts) sizes += (sizes.empty() ? "" : " ") + std::to_string(c);
  log_line("bin", "T=" + std::to_string(bins.T) + " bins, sizes: " + sizes);
  write_stage_manifest(out, "bin", inputs, params, {"bins.csv"},
                       {{"T", bins.T}, {"counts", bins.counts}});
}

std::vector<std::vector<int>> read_bins(const fs::path& p, int n_cells) {
  const std::string text = detail::read_file(p);
  std::vector<int> bin_of_cell;
  bool header = true;
  for (std::string_view line : detail::split_lines(text)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 2) {
      fail(Errc::parse_error, "bins.csv: expected 2 fields");
    }
    bin_of_cell.push_back(static_cast<int>(detail::parse_int(fields[1], "bin")));
  }
  if (static_cast<int>(bin_of_cell.size()) != n_cells) {
    fail(Errc::dimension_mismatch,
         "bins.csv covers " + std::to_string(bin_of_cell.size()) + " cells, expression has " +
             std::to_string(n_cells));
  }
  int T = 0;
  for (int b : bin_of_cell) T = std::max(T, b);
  std::vector<std::vector<int>> cells_of_bin(T);
  for (std::size_t c = 0; c < bin_of_cell.size(); ++c) {
    const int b = bin_of_cell[c];
    if (b < 1 || b > T) fail(Errc::parse_error, "bins.csv: bin index out of range");
    cells_of_bin[b - 1].push_back(static_cast<int>(c));
  }
  return cells_of_bin;
}

void cmd_infer_grn(const config::RunConfig& cfg, const DataFlags& d, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = required_path(d.expression, cfg.expression, "expression table");
  const fs::path reg = required_path(d.regulators, cfg.regulators, "regulator list");
  if (dry) {
    log_line("infer-grn", "dry-run: would infer snapshot GRNs from " + src.string());
    return;
  }
  const fs::path bins_file = out / "bins.csv";
  if (!fs::exists(bins_file)) {
    fail(Errc::io_failure, "bins.csv not found in " + out.string() + "; run bin first");
  }
  const std::map<std::string, std::string> inputs = {
      {"expression", file_checksum(src)},
      {"regulators", file_checksum(reg)},
      {"bins", file_checksum(bins_file)}};
  const std::string params = params_checksum(
      {{"corr", cfg.grn.corr == grn::CorrKind::pearson ? "pearson" : "spearman"},
       {"min_abs_corr", cfg.grn.min_abs_corr},
       {"top_k_per_tf", cfg.grn.top_k_per_tf},
       {"min_cells_expressed", cfg.grn.min_cells_expressed},
       {"format", d.format}});
  if (stage_up_to_date(out, "infer-grn", inputs, params, {"grn_edges.tsv"})) {
    log_line("infer-grn", "up to date, nothing to do");
    return;
  }

  ingest::ExpressionMatrix expr = load_expr(d, cfg);
  ingest::RegulatorList regulators = ingest::load_regulators(reg, expr.genes());
  log_line("infer-grn", std::to_string(regulators.ids.size()) + " regulators found, " +
                            std::to_string(regulators.skipped) + " symbols skipped");
  std::vector<std::vector<int>> cells_of_bin = read_bins(bins_file, expr.n_cells());

  std::vector<std::vector<graph::Edge>> per_t;
  for (std::size_t b = 0; b < cells_of_bin.size(); ++b) {
    per_t.push_back(
        grn::infer_coexpression_grn(expr, cells_of_bin[b], regulators, cfg.grn));
    log_line("infer-grn", "snapshot " + std::to_string(b + 1) + ": " +
                              std::to_string(per_t.back().size()) + " edges");
  }
  detail::write_file(out / "grn_edges.tsv", grn::render_edgelists(per_t, expr.genes()));
  write_stage_manifest(out, "infer-grn", inputs, params, {"grn_edges.tsv"},
                       {{"regulators", regulators.ids.size()},
                        {"skipped_symbols", regulators.skipped}});
}

void cmd_import_grn(const config::RunConfig& cfg, const DataFlags& d,
                    const std::string& edges_path, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = required_path(d.expression, cfg.expression, "expression table");
  const fs::path edges = required_path(edges_path, "", "edge list");
  if (dry) {
    log_line("import-grn", "dry-run: would import " + edges.string());
    return;
  }
  fs::create_directories(out);
  const std::map<std::string, std::string> inputs = {
      {"expression", file_checksum(src)}, {"edges", file_checksum(edges)}};
  const std::string params = params_checksum({{"format", d.format}});
  if (stage_up_to_date(out, "import-grn", inputs, params, {"grn_edges.tsv"})) {
    log_line("import-grn", "up to date, nothing to do");
    return;
  }

  ingest::ExpressionMatrix expr = load_expr(d, cfg);
  ingest::EdgeListImport imp = ingest::import_grn_edgelists(edges, expr.genes());
  log_line("import-grn", std::to_string(imp.snapshots.size()) + " snapshots, " +
                             std::to_string(imp.skipped_rows) +
                             " rows skipped (unknown symbols)");
  detail::write_file(out / "grn_edges.tsv",
                     grn::render_edgelists(imp.snapshots, expr.genes()));
  write_stage_manifest(out, "import-grn", inputs, params, {"grn_edges.tsv"},
                       {{"snapshots", imp.snapshots.size()},
                        {"skipped_rows", imp.skipped_rows}});
}

void cmd_build_graph(const config::RunConfig& cfg, const DataFlags& d, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = required_path(d.expression, cfg.expression, "expression table");
  if (dry) {
    log_line("build-graph", "dry-run: would assemble the temporal graph bundle");
    return;
  }
  const fs::path bins_file = out / "bins.csv";
  const fs::path edges_file = out / "grn_edges.tsv";
  if (!fs::exists(bins_file)) {
    fail(Errc::io_failure, "bins.csv not found in " + out.string() + "; run bin first");
  }
  if (!fs::exists(edges_file)) {
    fail(Errc::io_failure, "grn_edges.tsv not found in " + out.string() +
                               "; run infer-grn or import-grn first");
  }
  std::map<std::string, std::string> inputs = {
      {"expression", file_checksum(src)},
      {"bins", file_checksum(bins_file)},
      {"edges", file_checksum(edges_file)}};
  std::string emb_path = d.embeddings.empty() ? cfg.embeddings : d.embeddings;
  if (!emb_path.empty()) {
    inputs["embeddings"] = file_checksum(required_path(emb_path, "", "embeddings"));
  }
  const std::string params = params_checksum({{"format", d.format}});
  if (stage_up_to_date(out, "build-graph", inputs, params,
                       {"bundle/manifest.json"})) {
    log_line("build-graph", "up to date, nothing to do");
    return;
  }

  ingest::ExpressionMatrix expr = load_expr(d, cfg);
  std::vector<std::vector<int>> cells_of_bin = read_bins(bins_file, expr.n_cells());
  ingest::EdgeListImport imp = ingest::import_grn_edgelists(edges_file, expr.genes());
  if (imp.snapshots.size() != cells_of_bin.size()) {
    fail(Errc::dimension_mismatch,
         "grn_edges.tsv has " + std::to_string(imp.snapshots.size()) +
             " snapshots but bins.csv has " + std::to_string(cells_of_bin.size()));
  }
  std::optional<ingest::ExternalEmbeddings> emb;
  if (!emb_path.empty()) {
    emb = ingest::import_embeddings(emb_path, expr.genes());
    log_line("build-graph", "embeddings: " + std::to_string(emb->values.cols()) +
                                " dims, " + std::to_string(emb->missing_genes) +
                                " genes zero-filled");
  }

  std::vector<graph::Snapshot> snaps;
  for (std::size_t b = 0; b < cells_of_bin.size(); ++b) {
    Matrix feats = grn::node_features(expr, cells_of_bin[b]);
    snaps.push_back(grn::assemble_snapshot(static_cast<int>(b + 1),
                                           imp.snapshots[b], std::move(feats), emb,
                                           expr.n_genes()));
  }
  graph::TemporalGraph tg =
      graph::build_temporal_graph(expr.genes(), std::move(snaps));
  bundle::save_bundle(tg, out / "bundle");
  log_line("build-graph",
           "bundle: genes=" + std::to_string(tg.num_genes()) +
               " T=" + std::to_string(tg.T()) + " d_x=" +
               std::to_string(tg.snapshots.front().node_features.cols()));
  write_stage_manifest(out, "build-graph", inputs, params, {"bundle/manifest.json"},
                       {{"genes", tg.num_genes()}, {"T", tg.T()}});
}

fs::path resolve_bundle(const config::RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.bundle.empty()) return cfg.bundle;
  return resolve_out_dir(cfg) / "bundle";
}

void cmd_stats(const config::RunConfig& cfg, const std::string& bundle_flag, bool dry) {
  const fs::path dir = resolve_bundle(cfg, bundle_flag);
  if (dry) {
    log_line("stats", "dry-run: would summarize " + dir.string());
    return;
  }
  graph::TemporalGraph tg = bundle::load_bundle(dir);
  log_line("stats", "bundle: " + dir.string());
  log_line("stats", "genes: " + std::to_string(tg.num_genes()) +
                        "  T=" + std::to_string(tg.T()) + "  d_x=" +
                        std::to_string(tg.snapshots.front().node_features.cols()));
  for (const graph::Snapshot& s : tg.snapshots) {
    int active = 0;
    for (std::uint8_t a : s.active_mask) active += a;
    log_line("stats", "t=" + std::to_string(s.t) + " edges=" +
                          std::to_string(s.edges.size()) + " active=" +
                          std::to_string(active));
  }
  const graph::RecurrenceSeries rec = graph::recurrence_stats(tg);
  for (const graph::RecurrencePoint& p : rec.per_snapshot) {
    log_line("stats", "recurrence t=" + std::to_string(p.t) + ": recurrent=" +
                          detail::fmt_double(p.recurrent_fraction) + " new=" +
                          detail::fmt_double(p.new_fraction));
  }
  log_line("stats", "avg recurrence " + detail::fmt_double(rec.average));
}

struct BenchFlags {
  std::string bundle;
  std::vector<std::string> models;
  std::vector<std::string> tasks;
  std::vector<int> seeds;
  std::optional<double> lr, neg_ratio;
  std::optional<int> warmup, finetune, t_warm, precision_k, hub_top_n;
};

config::RunConfig apply_bench_flags(config::RunConfig cfg, const BenchFlags& f) {
  if (!f.models.empty()) {
    std::vector<config::ModelEntry> picked;
    for (const std::string& name : f.models) {
      bool found = false;
      for (const config::ModelEntry& e : cfg.models) {
        if (e.name == name) {
          picked.push_back(e);
          found = true;
          break;
        }
      }
      if (!found) {
        fail(Errc::config_error,
             "--models: \"" + name + "\" is not in the configured model list");
      }
    }
    cfg.models = picked;
  }
  if (!f.tasks.empty()) {
    cfg.tasks.clear();
    for (const std::string& t : f.tasks) cfg.tasks.push_back(bench::task_from_string(t));
  }
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (f.lr) cfg.train.lr = *f.lr;
  if (f.neg_ratio) cfg.train.neg_ratio = *f.neg_ratio;
  if (f.warmup) cfg.train.warmup_epochs = *f.warmup;
  if (f.finetune) cfg.train.finetune_epochs = *f.finetune;
  if (f.t_warm) cfg.train.t_warm = *f.t_warm;
  if (f.precision_k) cfg.train.precision_k = *f.precision_k;
  if (f.hub_top_n) cfg.hub_top_n = *f.hub_top_n;
  config::validate(cfg);
  return cfg;
}

void cmd_run_bench(const config::RunConfig& base, const BenchFlags& f, bool dry) {
  config::RunConfig cfg = apply_bench_flags(base, f);
  const fs::path out = resolve_out_dir(cfg);
  const fs::path dir = resolve_bundle(cfg, f.bundle);
  if (dry) {
    log_line("run-bench",
             "dry-run: would benchmark " + std::to_string(cfg.models.size()) +
                 " models x " + std::to_string(cfg.tasks.size()) + " tasks x " +
                 std::to_string(cfg.seeds.size()) + " seeds on " + dir.string());
    return;
  }
  if (!fs::exists(dir / "manifest.json")) {
    fail(Errc::io_failure, "no bundle at " + dir.string() +
                               "; run build-graph or point --bundle at one");
  }
  fs::create_directories(out);
  const std::map<std::string, std::string> inputs = {
      {"bundle", file_checksum(dir / "manifest.json")}};
  const std::string params = config::config_hash(config::canonical(cfg));
  if (stage_up_to_date(out, "run-bench", inputs, params, {"report.json"})) {
    log_line("run-bench", "up to date, nothing to do");
    return;
  }

  graph::TemporalGraph tg = bundle::load_bundle(dir);
  log_line("run-bench", "graph: genes=" + std::to_string(tg.num_genes()) +
                            " T=" + std::to_string(tg.T()));
  nlohmann::ordered_json report = bench::run_bench(tg, cfg, nullptr);
  bench::write_outputs(report, out);

  for (const auto& [task, models_json] : report["tasks"].items()) {
    for (const auto& [model, mj] : models_json.items()) {
      const auto& agg = mj.at("aggregate");
      const std::string metric = task == "link" ? "auprc" : "pcc";
      const auto& entry = agg.at(metric);
      std::string mean = entry.at("mean").is_null()
                             ? "n/a"
                             : detail::fmt_double(entry.at("mean").get<double>());
      std::string sd = entry.at("std").is_null()
                           ? "n/a"
                           : detail::fmt_double(entry.at("std").get<double>());
      log_line("run-bench", task + "/" + model + ": " + metric + " " + mean +
                                " +/- " + sd);
    }
  }
  std::vector<std::string> outputs = {"report.json"};
  for (const auto& [task, tj] : report["plots"]["trend"].items()) {
    (void)tj;
    outputs.push_back("trend_" + task + ".csv");
  }
  if (report["plots"].contains("hub_heatmap")) outputs.push_back("hub_heatmap.csv");
  write_stage_manifest(out, "run-bench", inputs, params, outputs,
                       {{"report", "report.json"}});
  log_line("run-bench", "wrote " + (out / "report.json").string());
}

void cmd_report(const config::RunConfig& cfg, const std::string& report_flag, bool dry) {
  const fs::path out = resolve_out_dir(cfg);
  const fs::path src = report_flag.empty() ? out / "report.json" : fs::path(report_flag);
  if (dry) {
    log_line("report", "dry-run: would regenerate CSVs from " + src.string());
    return;
  }
  if (!fs::exists(src)) {
    fail(Errc::io_failure, "report not found: " + src.string());
  }
  nlohmann::ordered_json report;
  try {
    report = nlohmann::ordered_json::parse(detail::read_file(src));
  } catch (const json::exception& e) {
    fail(Errc::parse_error, "report.json: " + std::string(e.what()));
  }
  if (!report.contains("schema_version") ||
      report["schema_version"] != bench::kReportSchemaVersion) {
    fail(Errc::schema_mismatch, "report schema version mismatch");
  }
  bench::write_outputs(report, out);
  log_line("report", "regenerated plot CSVs in " + out.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tgl: pseudotime-resolved gene-network forecasting\n"
      "Pipeline: ingest -> pseudotime -> bin -> infer-grn|import-grn -> "
      "build-graph -> run-bench -> report"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("-C,--config", g.config_path, "Run configuration JSON file");
  app.add_option("-o,--output-dir", g.output_dir,
                 "Output directory (default from config: out). The env var "
                 "TGL_OUTPUT_ROOT anchors relative paths");
  app.add_option("--seed", g.seed, "Top-level seed override (default 0)");
  app.add_option("--threads", g.threads,
                 "OpenMP threads; 1 (default) is the bit-reproducible mode")
      ->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Validate configuration, touch nothing");

  DataFlags d;
  std::string current_stage = "cli";

  auto add_data_flags = [&](CLI::App* sub, bool regulators = false,
                            bool embeddings = false) {
    sub->add_option("--expression", d.expression, "Expression counts table");
    sub->add_option("--format", d.format, "Expression format: auto|csv|mtx")
        ->check(CLI::IsMember({"auto", "csv", "mtx"}));
    if (regulators) {
      sub->add_option("--regulators", d.regulators, "Regulator symbol list");
    }
    if (embeddings) {
      sub->add_option("--embeddings", d.embeddings, "External gene embeddings CSV");
    }
  };

  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Validate the expression table");
  add_data_flags(ingest_cmd);

  CLI::App* pt_cmd = app.add_subcommand("pseudotime", "Order cells by diffusion pseudotime");
  add_data_flags(pt_cmd);
  std::optional<int> flag_k, flag_npcs, flag_m, flag_root;
  pt_cmd->add_option("--k", flag_k, "kNN neighbourhood size");
  pt_cmd->add_option("--n-pcs", flag_npcs, "Principal components kept");
  pt_cmd->add_option("--m", flag_m, "Diffusion components");
  pt_cmd->add_option("--root", flag_root, "Root cell index (-1: auto)");

  CLI::App* bin_cmd = app.add_subcommand("bin", "Equal-frequency pseudotime bins");
  std::optional<int> flag_min_cells, flag_target_bins;
  bin_cmd->add_option("--min-cells", flag_min_cells, "Minimum cells per bin");
  bin_cmd->add_option("--target-bins", flag_target_bins, "Upper bound on bins");

  CLI::App* grn_cmd =
      app.add_subcommand("infer-grn", "Per-bin coexpression GRN surrogate");
  add_data_flags(grn_cmd, /*regulators=*/true);
  std::string flag_corr;
  std::optional<double> flag_min_corr;
  std::optional<int> flag_top_k, flag_min_expr;
  grn_cmd->add_option("--corr", flag_corr, "Correlation: pearson|spearman")
      ->check(CLI::IsMember({"pearson", "spearman"}));
  grn_cmd->add_option("--min-abs-corr", flag_min_corr, "Confidence threshold");
  grn_cmd->add_option("--top-k-per-tf", flag_top_k, "Cap targets per regulator");
  grn_cmd->add_option("--min-cells-expressed", flag_min_expr,
                      "Expression floor per gene");

  CLI::App* import_cmd =
      app.add_subcommand("import-grn", "Import externally inferred edge lists");
  add_data_flags(import_cmd);
  std::string flag_edges;
  import_cmd->add_option("--edges", flag_edges, "Edge-list TSV to import")->required();

  CLI::App* build_cmd =
      app.add_subcommand("build-graph", "Assemble the temporal graph bundle");
  add_data_flags(build_cmd, /*regulators=*/false, /*embeddings=*/true);

  CLI::App* stats_cmd = app.add_subcommand("stats", "Summarize a bundle");
  std::string flag_bundle;
  stats_cmd->add_option("--bundle", flag_bundle, "Bundle directory");

  CLI::App* bench_cmd =
      app.add_subcommand("run-bench", "Live-update benchmark over the model zoo");
  BenchFlags bf;
  bench_cmd->add_option("--bundle", bf.bundle, "Bundle directory");
  bench_cmd->add_option("--models", bf.models,
                        "Subset of configured model names")
      ->delimiter(',');
  bench_cmd->add_option("--tasks", bf.tasks, "Subset of tasks")->delimiter(',');
  bench_cmd->add_option("--seeds", bf.seeds, "Seed indices")->delimiter(',');
  bench_cmd->add_option("--lr", bf.lr, "Adam learning rate");
  bench_cmd->add_option("--warmup", bf.warmup, "Warmup epochs");
  bench_cmd->add_option("--finetune", bf.finetune, "Fine-tune epochs per step");
  bench_cmd->add_option("--t-warm", bf.t_warm, "Warmup horizon");
  bench_cmd->add_option("--neg-ratio", bf.neg_ratio, "Negatives per positive");
  bench_cmd->add_option("--precision-k", bf.precision_k, "k for precision@k");
  bench_cmd->add_option("--hub-top-n", bf.hub_top_n, "Genes in the hub heatmap");

  CLI::App* report_cmd =
      app.add_subcommand("report", "Regenerate plot CSVs from report.json");
  std::string flag_report;
  report_cmd->add_option("--report", flag_report, "Existing report.json");

  CLI11_PARSE(app, argc, argv);

  omp_set_num_threads(g.threads);

  try {
    config::RunConfig cfg = resolve_config(g);
    if (g.dry_run) {
      std::cout << config::to_json(cfg).dump(2) << "\n";
    }
    if (ingest_cmd->parsed()) {
      current_stage = "ingest";
      cmd_ingest(cfg, d, g.dry_run);
    } else if (pt_cmd->parsed()) {
      current_stage = "pseudotime";
      if (flag_k) cfg.knn_k = *flag_k;
      if (flag_npcs) cfg.n_pcs = *flag_npcs;
      if (flag_m) cfg.dpt_m = *flag_m;
      if (flag_root) cfg.root = *flag_root;
      config::validate(cfg);
      cmd_pseudotime(cfg, d, g.dry_run);
    } else if (bin_cmd->parsed()) {
      current_stage = "bin";
      if (flag_min_cells) cfg.min_cells = *flag_min_cells;
      if (flag_target_bins) cfg.target_bins = *flag_target_bins;
      config::validate(cfg);
      cmd_bin(cfg, g.dry_run);
    } else if (grn_cmd->parsed()) {
      current_stage = "infer-grn";
      if (!flag_corr.empty()) {
        cfg.grn.corr = flag_corr == "pearson" ? grn::CorrKind::pearson
                                              : grn::CorrKind::spearman;
      }
      if (flag_min_corr) cfg.grn.min_abs_corr = *flag_min_corr;
      if (flag_top_k) cfg.grn.top_k_per_tf = *flag_top_k;
      if (flag_min_expr) cfg.grn.min_cells_expressed = *flag_min_expr;
      config::validate(cfg);
      cmd_infer_grn(cfg, d, g.dry_run);
    } else if (import_cmd->parsed()) {
      current_stage = "import-grn";
      cmd_import_grn(cfg, d, flag_edges, g.dry_run);
    } else if (build_cmd->parsed()) {
      current_stage = "build-graph";
      cmd_build_graph(cfg, d, g.dry_run);
    } else if (stats_cmd->parsed()) {
      current_stage = "stats";
      cmd_stats(cfg, flag_bundle, g.dry_run);
    } else if (bench_cmd->parsed()) {
      current_stage = "run-bench";
      cmd_run_bench(cfg, bf, g.dry_run);
    } else if (report_cmd->parsed()) {
      current_stage = "report";
      cmd_report(cfg, flag_report, g.dry_run);
    }
  } catch (const Error& e) {
    std::cerr << "error: [" << current_stage << "] " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << current_stage << "] Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
