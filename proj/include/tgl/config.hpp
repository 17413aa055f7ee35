#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgl/bench.hpp"
#include "tgl/grn.hpp"
#include "tgl/models.hpp"

namespace tgl::config {

// One model under benchmark; name is the report key and defaults to the
// family name, so configs listing a family twice must name the entries.
struct ModelEntry {
  std::string name;
  models::ModelConfig cfg;
};

// Everything a full pipeline run depends on. The JSON form is canonical:
// to_json always emits every field in a fixed order, which makes the
// config hash stable across defaulted and spelled-out configs.
struct RunConfig {
  // data
  std::string expression;  // counts table (ingest formats)
  std::string regulators;  // one regulator symbol per line
  std::string embeddings;  // optional external embedding table
  std::string bundle;      // prebuilt temporal-graph bundle directory

  // trajectory
  int knn_k = 15;
  int n_pcs = 30;
  int dpt_m = 10;
  int root = -1;  // -1 selects the root automatically

  // binning
  int min_cells = 50;
  int target_bins = 10;

  grn::GrnParams grn;

  // bench
  std::vector<ModelEntry> models;  // default: every family, default config
  std::vector<bench::Task> tasks;  // default: all three
  bench::TrainParams train;
  std::uint64_t seed = 0;               // top-level seed, expanded per run
  std::vector<int> seeds = {0, 1, 2, 3, 4};  // seed indices
  int hub_top_n = 20;  // genes kept in the centrality heatmap
  std::string output_dir = "out";
};

RunConfig default_config();

// Unknown keys anywhere in the document are rejected (ConfigError), as are
// type mismatches and invalid values.
RunConfig from_json(const nlohmann::json& j);
RunConfig load_file(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& c);
void validate(const RunConfig& c);

// Copy with file locations blanked. Reports hash and embed the canonical
// form, so moving inputs or outputs never changes result bytes.
RunConfig canonical(const RunConfig& c);

// FNV-1a over the canonical serialization, 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace tgl::config
