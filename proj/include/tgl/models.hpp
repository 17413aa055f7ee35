#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "tgl/graph.hpp"
#include "tgl/layers.hpp"

namespace tgl::models {

enum class Family {
  edgebank,
  linear,
  mlp,
  gcn,
  gat,
  chebnet,
  evolvegcn,
  gcrn_gru,
  roland,
};

Family family_from_string(const std::string& name);
const char* family_name(Family f);
const std::vector<Family>& all_families();

enum class DecoderKind { dot, mlp };

struct ModelConfig {
  Family family = Family::gcn;
  int hidden = 64;
  int layers = 2;
  int cheb_k = 3;
  int heads = 4;
  double dropout = 0.1;
  DecoderKind decoder = DecoderKind::dot;

  void validate() const;  // throws ConfigError
};

// One forecaster instance bound to a fixed vocabulary size and feature
// width. The committed recurrent state only ever moves through advance();
// encode() is pure with respect to it, so the live-update loop can evaluate
// and fine-tune any number of times before deciding to move forward.
class Model {
 public:
  Model(ModelConfig cfg, int n_nodes, int d_x, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  int n_nodes() const { return n_nodes_; }
  int d_x() const { return d_x_; }
  bool learned() const { return cfg_.family != Family::edgebank; }

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  // Embeddings for one snapshot, |V| x hidden, computed from the committed
  // recurrent state. training=true enables dropout (drawn from the model's
  // own seeded stream). Not available for edgebank.
  nn::Tensor encode(const graph::Snapshot& snap, bool training);

  // Decoder heads over encode() output.
  nn::Tensor link_logits(const nn::Tensor& h, const std::vector<int>& src,
                         const std::vector<int>& dst);
  nn::Tensor node_scores(const nn::Tensor& h);  // |V| x 1 linear readout

  // Commits the state transition for snapshot t: temporal families adopt
  // the recurrent state proposed by an eval-mode encode, edgebank inserts
  // the edges into its memory, static families do nothing.
  void advance(const graph::Snapshot& snap);
  void reset_state();

  // Edgebank paths (learned() == false).
  double edgebank_score(int src, int dst) const;
  std::vector<double> edgebank_centrality() const;
  std::size_t edgebank_memory_size() const;

  // Recurrent state capture for divergence rollback.
  struct StateSnapshot {
    std::vector<Matrix> layers;
    bool initialized = false;
  };
  StateSnapshot state_snapshot() const;
  void state_restore(const StateSnapshot& s);

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  void build_params();
  nn::Tensor encode_impl(const graph::Snapshot& snap, bool training,
                         std::vector<Matrix>* proposed);

  ModelConfig cfg_;
  int n_nodes_ = 0;
  int d_x_ = 0;
  std::uint64_t seed_ = 0;
  nn::ParamSet params_;
  rng::Rng dropout_rng_;

  // gcrn-gru/roland: per-layer |V| x hidden states; evolvegcn: per-layer
  // evolved weight values. Empty until the first advance(); evolvegcn then
  // reads its trainable W0 tensors so the first step trains them directly.
  std::vector<Matrix> state_;
  bool state_initialized_ = false;

  std::unordered_set<std::uint64_t> memory_;  // edgebank
};

}  // namespace tgl::models
