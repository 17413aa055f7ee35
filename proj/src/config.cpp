#include "tgl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tgl/errors.hpp"
#include "tgl/rng.hpp"

namespace tgl::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) {
    fail(Errc::config_error, where + " must be a JSON object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(Errc::config_error, "unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::config_error, where + "." + key + ": " + e.what());
  }
}

grn::CorrKind corr_from_string(const std::string& s) {
  if (s == "pearson") return grn::CorrKind::pearson;
  if (s == "spearman") return grn::CorrKind::spearman;
  fail(Errc::config_error, "grn.corr must be \"pearson\" or \"spearman\", got \"" + s + "\"");
}

const char* corr_name(grn::CorrKind k) {
  return k == grn::CorrKind::pearson ? "pearson" : "spearman";
}

models::DecoderKind decoder_from_string(const std::string& s) {
  if (s == "dot") return models::DecoderKind::dot;
  if (s == "mlp") return models::DecoderKind::mlp;
  fail(Errc::config_error, "decoder must be \"dot\" or \"mlp\", got \"" + s + "\"");
}

const char* decoder_name(models::DecoderKind k) {
  return k == models::DecoderKind::dot ? "dot" : "mlp";
}

ModelEntry model_entry_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"family", "name", "hidden", "layers", "cheb_k", "heads",
                     "dropout", "decoder"},
                 where);
  if (!j.contains("family")) {
    fail(Errc::config_error, where + ": \"family\" is required");
  }
  ModelEntry e;
  std::string family;
  read(j, "family", family, where);
  e.cfg.family = models::family_from_string(family);
  e.name = models::family_name(e.cfg.family);
  read(j, "name", e.name, where);
  read(j, "hidden", e.cfg.hidden, where);
  read(j, "layers", e.cfg.layers, where);
  read(j, "cheb_k", e.cfg.cheb_k, where);
  read(j, "heads", e.cfg.heads, where);
  read(j, "dropout", e.cfg.dropout, where);
  if (j.contains("decoder")) {
    std::string dec;
    read(j, "decoder", dec, where);
    e.cfg.decoder = decoder_from_string(dec);
  }
  return e;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  for (models::Family f : models::all_families()) {
    c.models.push_back({models::family_name(f), models::ModelConfig{f}});
  }
  c.tasks = bench::all_tasks();
  return c;
}

RunConfig from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"data", "trajectory", "binning", "grn", "models", "tasks",
                  "train", "seed", "seeds", "hub_top_n", "output_dir"},
                 "config");
  RunConfig c = default_config();

  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown(d, {"expression", "regulators", "embeddings", "bundle"}, "data");
    read(d, "expression", c.expression, "data");
    read(d, "regulators", c.regulators, "data");
    read(d, "embeddings", c.embeddings, "data");
    read(d, "bundle", c.bundle, "data");
  }
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    reject_unknown(t, {"k", "n_pcs", "m", "root"}, "trajectory");
    read(t, "k", c.knn_k, "trajectory");
    read(t, "n_pcs", c.n_pcs, "trajectory");
    read(t, "m", c.dpt_m, "trajectory");
    read(t, "root", c.root, "trajectory");
  }
  if (j.contains("binning")) {
    const json& b = j.at("binning");
    reject_unknown(b, {"min_cells", "target_bins"}, "binning");
    read(b, "min_cells", c.min_cells, "binning");
    read(b, "target_bins", c.target_bins, "binning");
  }
  if (j.contains("grn")) {
    const json& g = j.at("grn");
    reject_unknown(g, {"corr", "min_abs_corr", "top_k_per_tf", "min_cells_expressed"},
                   "grn");
    if (g.contains("corr")) {
      std::string corr;
      read(g, "corr", corr, "grn");
      c.grn.corr = corr_from_string(corr);
    }
    read(g, "min_abs_corr", c.grn.min_abs_corr, "grn");
    read(g, "top_k_per_tf", c.grn.top_k_per_tf, "grn");
    read(g, "min_cells_expressed", c.grn.min_cells_expressed, "grn");
  }
  if (j.contains("models")) {
    if (!j.at("models").is_array()) {
      fail(Errc::config_error, "models must be an array");
    }
    c.models.clear();
    int idx = 0;
    for (const json& m : j.at("models")) {
      c.models.push_back(model_entry_from_json(m, "models[" + std::to_string(idx) + "]"));
      ++idx;
    }
  }
  if (j.contains("tasks")) {
    if (!j.at("tasks").is_array()) {
      fail(Errc::config_error, "tasks must be an array");
    }
    c.tasks.clear();
    for (const json& t : j.at("tasks")) {
      if (!t.is_string()) fail(Errc::config_error, "tasks entries must be strings");
      c.tasks.push_back(bench::task_from_string(t.get<std::string>()));
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t,
                   {"lr", "warmup_epochs", "finetune_epochs", "t_warm",
                    "neg_ratio", "precision_k"},
                   "train");
    read(t, "lr", c.train.lr, "train");
    read(t, "warmup_epochs", c.train.warmup_epochs, "train");
    read(t, "finetune_epochs", c.train.finetune_epochs, "train");
    read(t, "t_warm", c.train.t_warm, "train");
    read(t, "neg_ratio", c.train.neg_ratio, "train");
    read(t, "precision_k", c.train.precision_k, "train");
  }
  read(j, "seed", c.seed, "config");
  read(j, "seeds", c.seeds, "config");
  read(j, "hub_top_n", c.hub_top_n, "config");
  read(j, "output_dir", c.output_dir, "config");

  validate(c);
  return c;
}

RunConfig load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::parse_error, "config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["data"] = {{"expression", c.expression},
               {"regulators", c.regulators},
               {"embeddings", c.embeddings},
               {"bundle", c.bundle}};
  j["trajectory"] = {{"k", c.knn_k}, {"n_pcs", c.n_pcs}, {"m", c.dpt_m}, {"root", c.root}};
  j["binning"] = {{"min_cells", c.min_cells}, {"target_bins", c.target_bins}};
  j["grn"] = {{"corr", corr_name(c.grn.corr)},
              {"min_abs_corr", c.grn.min_abs_corr},
              {"top_k_per_tf", c.grn.top_k_per_tf},
              {"min_cells_expressed", c.grn.min_cells_expressed}};
  j["models"] = nlohmann::ordered_json::array();
  for (const ModelEntry& e : c.models) {
    j["models"].push_back({{"family", models::family_name(e.cfg.family)},
                           {"name", e.name},
                           {"hidden", e.cfg.hidden},
                           {"layers", e.cfg.layers},
                           {"cheb_k", e.cfg.cheb_k},
                           {"heads", e.cfg.heads},
                           {"dropout", e.cfg.dropout},
                           {"decoder", decoder_name(e.cfg.decoder)}});
  }
  j["tasks"] = nlohmann::ordered_json::array();
  for (bench::Task t : c.tasks) j["tasks"].push_back(bench::task_name(t));
  j["train"] = {{"lr", c.train.lr},
                {"warmup_epochs", c.train.warmup_epochs},
                {"finetune_epochs", c.train.finetune_epochs},
                {"t_warm", c.train.t_warm},
                {"neg_ratio", c.train.neg_ratio},
                {"precision_k", c.train.precision_k}};
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  j["hub_top_n"] = c.hub_top_n;
  j["output_dir"] = c.output_dir;
  return j;
}

void validate(const RunConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(Errc::config_error, std::string(name) + " must be positive and finite");
    }
  };
  auto at_least = [](int v, int lo, const char* name) {
    if (v < lo) {
      fail(Errc::config_error,
           std::string(name) + " must be >= " + std::to_string(lo));
    }
  };
  at_least(c.knn_k, 1, "trajectory.k");
  at_least(c.n_pcs, 1, "trajectory.n_pcs");
  at_least(c.dpt_m, 1, "trajectory.m");
  at_least(c.min_cells, 1, "binning.min_cells");
  at_least(c.target_bins, 1, "binning.target_bins");
  if (c.grn.min_abs_corr < 0.0 || c.grn.min_abs_corr > 1.0) {
    fail(Errc::config_error, "grn.min_abs_corr must lie in [0,1]");
  }
  at_least(c.grn.top_k_per_tf, 0, "grn.top_k_per_tf");
  at_least(c.grn.min_cells_expressed, 0, "grn.min_cells_expressed");

  if (c.models.empty()) fail(Errc::config_error, "models must be nonempty");
  std::set<std::string> names;
  for (const ModelEntry& e : c.models) {
    if (e.name.empty()) fail(Errc::config_error, "model name must be nonempty");
    if (!names.insert(e.name).second) {
      fail(Errc::config_error, "duplicate model name \"" + e.name + "\"");
    }
    e.cfg.validate();
  }
  if (c.tasks.empty()) fail(Errc::config_error, "tasks must be nonempty");
  std::set<bench::Task> seen;
  for (bench::Task t : c.tasks) {
    if (!seen.insert(t).second) {
      fail(Errc::config_error, std::string("duplicate task \"") + bench::task_name(t) + "\"");
    }
  }

  positive(c.train.lr, "train.lr");
  at_least(c.train.warmup_epochs, 0, "train.warmup_epochs");
  at_least(c.train.finetune_epochs, 0, "train.finetune_epochs");
  at_least(c.train.t_warm, 2, "train.t_warm");
  positive(c.train.neg_ratio, "train.neg_ratio");
  at_least(c.train.precision_k, 1, "train.precision_k");

  at_least(c.hub_top_n, 1, "hub_top_n");
  if (c.seeds.empty()) fail(Errc::config_error, "seeds must be nonempty");
  std::set<int> sidx;
  for (int s : c.seeds) {
    if (s < 0) fail(Errc::config_error, "seed indices must be nonnegative");
    if (!sidx.insert(s).second) {
      fail(Errc::config_error, "duplicate seed index " + std::to_string(s));
    }
  }
  if (c.output_dir.empty()) fail(Errc::config_error, "output_dir must be nonempty");
}

RunConfig canonical(const RunConfig& c) {
  RunConfig canon = c;
  canon.expression.clear();
  canon.regulators.clear();
  canon.embeddings.clear();
  canon.bundle.clear();
  canon.output_dir = "out";
  return canon;
}

std::string config_hash(const RunConfig& c) {
  const std::string dump = to_json(c).dump();
  const std::uint64_t h = rng::fnv1a(dump);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace tgl::config
