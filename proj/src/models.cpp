#include "tgl/models.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "tgl/checkpoint.hpp"
#include "tgl/rng.hpp"

namespace tgl::models {

namespace {

struct FamilyName {
  Family family;
  const char* name;
};

constexpr FamilyName kFamilies[] = {
    {Family::edgebank, "edgebank"}, {Family::linear, "linear"},
    {Family::mlp, "mlp"},           {Family::gcn, "gcn"},
    {Family::gat, "gat"},           {Family::chebnet, "chebnet"},
    {Family::evolvegcn, "evolvegcn"}, {Family::gcrn_gru, "gcrn-gru"},
    {Family::roland, "roland"},
};

std::string layer_prefix(int l) { return "enc.l" + std::to_string(l) + "."; }

}  // namespace

Family family_from_string(const std::string& name) {
  for (const auto& [family, fname] : kFamilies)
    if (name == fname) return family;
  fail(Errc::config_error, "unknown model family '" + name + "'");
}

const char* family_name(Family f) {
  for (const auto& [family, fname] : kFamilies)
    if (family == f) return fname;
  fail(Errc::config_error, "unnamed model family");
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families = [] {
    std::vector<Family> out;
    for (const auto& [family, _] : kFamilies) out.push_back(family);
    return out;
  }();
  return families;
}

void ModelConfig::validate() const {
  if (hidden < 1) fail(Errc::config_error, "hidden must be >= 1");
  if (layers < 1) fail(Errc::config_error, "layers must be >= 1");
  if (cheb_k < 1) fail(Errc::config_error, "cheb_k must be >= 1");
  if (heads < 1) fail(Errc::config_error, "heads must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    fail(Errc::config_error, "dropout must lie in [0, 1)");
  if (family == Family::gat && hidden % heads != 0)
    fail(Errc::config_error, "gat needs hidden divisible by heads");
}

Model::Model(ModelConfig cfg, int n_nodes, int d_x, std::uint64_t seed)
    : cfg_(cfg),
      n_nodes_(n_nodes),
      d_x_(d_x),
      seed_(seed),
      params_(rng::derive_seed(seed, "params")),
      dropout_rng_(rng::derive_seed(seed, "dropout")) {
  cfg_.validate();
  if (n_nodes < 1) fail(Errc::config_error, "model needs >= 1 node");
  if (d_x < 1) fail(Errc::config_error, "model needs >= 1 feature column");
  build_params();
}

void Model::build_params() {
  if (cfg_.family == Family::edgebank) return;  // pure memorization

  int h = cfg_.hidden;
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string p = layer_prefix(l);
    int in = l == 0 ? d_x_ : h;
    switch (cfg_.family) {
      case Family::linear:
        if (l > 0) break;  // single map regardless of layers
        params_.weight("enc.w", d_x_, h);
        params_.bias("enc.b", h);
        break;
      case Family::mlp:
      case Family::gcn:
        params_.weight(p + "w", in, h);
        params_.bias(p + "b", h);
        break;
      case Family::chebnet:
        for (int k = 0; k < cfg_.cheb_k; ++k)
          params_.weight(p + "cheb" + std::to_string(k), in, h);
        params_.bias(p + "b", h);
        break;
      case Family::gat: {
        int dh = h / cfg_.heads;
        for (int head = 0; head < cfg_.heads; ++head) {
          std::string hp = p + "h" + std::to_string(head) + ".";
          params_.weight(hp + "w", in, dh);
          params_.weight(hp + "asrc", dh, 1);
          params_.weight(hp + "adst", dh, 1);
        }
        params_.bias(p + "b", h);
        break;
      }
      case Family::evolvegcn:
        params_.weight(p + "w0", in, h);
        for (const char* g : {"wxz", "whz", "wxr", "whr", "wxh", "whh"})
          params_.weight(p + g, h, h);
        for (const char* g : {"bz", "br", "bh"}) params_.bias(p + g, h);
        params_.bias(p + "b", h);
        break;
      case Family::gcrn_gru:
        for (const char* g : {"wxz", "wxr", "wxh"})
          for (int k = 0; k < cfg_.cheb_k; ++k)
            params_.weight(p + g + std::to_string(k), in, h);
        for (const char* g : {"whz", "whr", "whh"})
          for (int k = 0; k < cfg_.cheb_k; ++k)
            params_.weight(p + g + std::to_string(k), h, h);
        for (const char* g : {"bz", "br", "bh"}) params_.bias(p + g, h);
        break;
      case Family::roland:
        for (int k = 0; k < cfg_.cheb_k; ++k)
          params_.weight(p + "cheb" + std::to_string(k), in, h);
        params_.bias(p + "cb", h);
        for (const char* g : {"wxz", "whz", "wxr", "whr", "wxh", "whh"})
          params_.weight(p + g, h, h);
        for (const char* g : {"bz", "br", "bh"}) params_.bias(p + g, h);
        break;
      case Family::edgebank:
        break;
    }
  }

  if (cfg_.decoder == DecoderKind::mlp) {
    params_.weight("dec.link.w1", 2 * h, h);
    params_.bias("dec.link.b1", h);
    params_.weight("dec.link.w2", h, 1);
    params_.bias("dec.link.b2", 1);
  }
  params_.weight("dec.node.w", h, 1);
  params_.bias("dec.node.b", 1);
}

namespace {

std::vector<nn::Tensor> gather_stack(const nn::ParamSet& params,
                                     const std::string& prefix, int k) {
  std::vector<nn::Tensor> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(params.get(prefix + std::to_string(i)));
  return out;
}

}  // namespace

nn::Tensor Model::encode_impl(const graph::Snapshot& snap, bool training,
                              std::vector<Matrix>* proposed) {
  if (!learned())
    fail(Errc::config_error, "edgebank has no learned encoder");
  if (snap.node_features.rows() != n_nodes_ ||
      snap.node_features.cols() != d_x_)
    fail(Errc::shape_mismatch, "snapshot features do not match the model");

  bool needs_graph = cfg_.family != Family::linear && cfg_.family != Family::mlp;
  nn::GraphOps ops;
  if (needs_graph) ops = nn::build_graph_ops(snap.edges, n_nodes_);

  bool temporal = cfg_.family == Family::gcrn_gru ||
                  cfg_.family == Family::roland ||
                  cfg_.family == Family::evolvegcn;
  if (temporal && proposed) proposed->clear();

  int h = cfg_.hidden;
  nn::Tensor x = nn::constant(snap.node_features);

  auto maybe_dropout = [&](nn::Tensor t) {
    return training && cfg_.dropout > 0.0 ? nn::dropout(t, cfg_.dropout, dropout_rng_)
                                          : t;
  };

  switch (cfg_.family) {
    case Family::linear:
      return nn::add_rowvec(nn::matmul(x, params_.get("enc.w")),
                            params_.get("enc.b"));

    case Family::mlp: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        cur = nn::add_rowvec(nn::matmul(cur, params_.get(p + "w")),
                             params_.get(p + "b"));
        if (l + 1 < cfg_.layers) cur = maybe_dropout(nn::relu(cur));
      }
      return cur;
    }

    case Family::gcn: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        cur = nn::add_rowvec(nn::gcn_conv(cur, ops, params_.get(p + "w")),
                             params_.get(p + "b"));
        if (l + 1 < cfg_.layers) cur = maybe_dropout(nn::relu(cur));
      }
      return cur;
    }

    case Family::chebnet: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        cur = nn::add_rowvec(
            nn::cheb_conv(cur, ops, gather_stack(params_, p + "cheb", cfg_.cheb_k)),
            params_.get(p + "b"));
        if (l + 1 < cfg_.layers) cur = maybe_dropout(nn::relu(cur));
      }
      return cur;
    }

    case Family::gat: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        std::vector<nn::GatHead> heads;
        for (int head = 0; head < cfg_.heads; ++head) {
          std::string hp = p + "h" + std::to_string(head) + ".";
          heads.push_back({params_.get(hp + "w"), params_.get(hp + "asrc"),
                           params_.get(hp + "adst")});
        }
        cur = nn::add_rowvec(nn::gat_conv(cur, ops, heads), params_.get(p + "b"));
        if (l + 1 < cfg_.layers) cur = maybe_dropout(nn::relu(cur));
      }
      return cur;
    }

    case Family::evolvegcn: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        nn::Tensor w_prev = state_initialized_
                                ? nn::constant(state_[l])
                                : params_.get(p + "w0");
        nn::GruParams gru{params_.get(p + "wxz"), params_.get(p + "whz"),
                          params_.get(p + "bz"),  params_.get(p + "wxr"),
                          params_.get(p + "whr"), params_.get(p + "br"),
                          params_.get(p + "wxh"), params_.get(p + "whh"),
                          params_.get(p + "bh")};
        nn::Tensor w_t = nn::gru_cell(w_prev, w_prev, gru);
        if (proposed) proposed->push_back(w_t->value);
        cur = nn::add_rowvec(nn::gcn_conv(cur, ops, w_t), params_.get(p + "b"));
        if (l + 1 < cfg_.layers) cur = maybe_dropout(nn::relu(cur));
      }
      return cur;
    }

    case Family::gcrn_gru: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        nn::Tensor h_prev = nn::constant(
            state_initialized_ ? state_[l] : Matrix(n_nodes_, h));
        nn::GraphGruParams gp;
        gp.wxz = gather_stack(params_, p + "wxz", cfg_.cheb_k);
        gp.whz = gather_stack(params_, p + "whz", cfg_.cheb_k);
        gp.wxr = gather_stack(params_, p + "wxr", cfg_.cheb_k);
        gp.whr = gather_stack(params_, p + "whr", cfg_.cheb_k);
        gp.wxh = gather_stack(params_, p + "wxh", cfg_.cheb_k);
        gp.whh = gather_stack(params_, p + "whh", cfg_.cheb_k);
        gp.bz = params_.get(p + "bz");
        gp.br = params_.get(p + "br");
        gp.bh = params_.get(p + "bh");
        cur = nn::graph_gru_cell(cur, h_prev, ops, gp);
        if (proposed) proposed->push_back(cur->value);
        if (l + 1 < cfg_.layers && training) cur = maybe_dropout(cur);
      }
      return cur;
    }

    case Family::roland: {
      nn::Tensor cur = x;
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = layer_prefix(l);
        nn::Tensor msg = nn::add_rowvec(
            nn::cheb_conv(cur, ops, gather_stack(params_, p + "cheb", cfg_.cheb_k)),
            params_.get(p + "cb"));
        nn::Tensor h_prev = nn::constant(
            state_initialized_ ? state_[l] : Matrix(n_nodes_, h));
        nn::GruParams gru{params_.get(p + "wxz"), params_.get(p + "whz"),
                          params_.get(p + "bz"),  params_.get(p + "wxr"),
                          params_.get(p + "whr"), params_.get(p + "br"),
                          params_.get(p + "wxh"), params_.get(p + "whh"),
                          params_.get(p + "bh")};
        cur = nn::gru_cell(msg, h_prev, gru);
        if (proposed) proposed->push_back(cur->value);
        if (l + 1 < cfg_.layers && training) cur = maybe_dropout(cur);
      }
      return cur;
    }

    case Family::edgebank:
      break;
  }
  fail(Errc::config_error, "unreachable encode dispatch");
}

nn::Tensor Model::encode(const graph::Snapshot& snap, bool training) {
  return encode_impl(snap, training, nullptr);
}

nn::Tensor Model::link_logits(const nn::Tensor& h, const std::vector<int>& src,
                              const std::vector<int>& dst) {
  if (src.size() != dst.size())
    fail(Errc::length_mismatch, "src/dst pair lists differ in length");
  auto si = std::make_shared<const std::vector<int>>(src);
  auto di = std::make_shared<const std::vector<int>>(dst);
  nn::Tensor hs = nn::gather_rows(h, si);
  nn::Tensor hd = nn::gather_rows(h, di);
  if (cfg_.decoder == DecoderKind::dot)
    return nn::row_sum(nn::mul(hs, hd));
  nn::Tensor z = nn::concat_cols(hs, hd);
  nn::Tensor mid = nn::relu(nn::add_rowvec(
      nn::matmul(z, params_.get("dec.link.w1")), params_.get("dec.link.b1")));
  return nn::add_rowvec(nn::matmul(mid, params_.get("dec.link.w2")),
                        params_.get("dec.link.b2"));
}

nn::Tensor Model::node_scores(const nn::Tensor& h) {
  return nn::add_rowvec(nn::matmul(h, params_.get("dec.node.w")),
                        params_.get("dec.node.b"));
}

void Model::advance(const graph::Snapshot& snap) {
  if (cfg_.family == Family::edgebank) {
    for (const graph::Edge& e : snap.edges)
      memory_.insert(graph::pair_key(e.src, e.dst));
    return;
  }
  bool temporal = cfg_.family == Family::gcrn_gru ||
                  cfg_.family == Family::roland ||
                  cfg_.family == Family::evolvegcn;
  if (!temporal) return;
  std::vector<Matrix> proposed;
  encode_impl(snap, /*training=*/false, &proposed);
  state_ = std::move(proposed);
  state_initialized_ = true;
}

void Model::reset_state() {
  state_.clear();
  state_initialized_ = false;
  memory_.clear();
}

double Model::edgebank_score(int src, int dst) const {
  return memory_.count(graph::pair_key(src, dst)) ? 1.0 : 0.0;
}

std::vector<double> Model::edgebank_centrality() const {
  std::vector<double> out(n_nodes_, 0.0);
  for (std::uint64_t key : memory_) out[key >> 32] += 1.0;
  if (n_nodes_ > 1)
    for (double& v : out) v /= n_nodes_ - 1;
  return out;
}

std::size_t Model::edgebank_memory_size() const { return memory_.size(); }

Model::StateSnapshot Model::state_snapshot() const {
  return StateSnapshot{state_, state_initialized_};
}

void Model::state_restore(const StateSnapshot& s) {
  state_ = s.layers;
  state_initialized_ = s.initialized;
}

void Model::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["family"] = family_name(cfg_.family);
  meta["hidden"] = cfg_.hidden;
  meta["layers"] = cfg_.layers;
  meta["cheb_k"] = cfg_.cheb_k;
  meta["heads"] = cfg_.heads;
  meta["dropout"] = cfg_.dropout;
  meta["decoder"] = cfg_.decoder == DecoderKind::dot ? "dot" : "mlp";
  meta["n_nodes"] = n_nodes_;
  meta["d_x"] = d_x_;
  meta["seed"] = seed_;

  nn::Archive archive;
  archive.header = meta.dump();
  for (const auto& [name, tensor] : params_.entries())
    archive.params.emplace_back(name, tensor->value);
  nn::save_archive(path, archive);
}

Model Model::load(const std::filesystem::path& path) {
  nn::Archive archive = nn::load_archive(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(archive.header);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("checkpoint header: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.family = family_from_string(meta.at("family").get<std::string>());
    cfg.hidden = meta.at("hidden").get<int>();
    cfg.layers = meta.at("layers").get<int>();
    cfg.cheb_k = meta.at("cheb_k").get<int>();
    cfg.heads = meta.at("heads").get<int>();
    cfg.dropout = meta.at("dropout").get<double>();
    std::string dec = meta.at("decoder").get<std::string>();
    if (dec != "dot" && dec != "mlp")
      fail(Errc::parse_error, "checkpoint decoder '" + dec + "'");
    cfg.decoder = dec == "dot" ? DecoderKind::dot : DecoderKind::mlp;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema_mismatch,
         std::string("checkpoint header incomplete: ") + e.what());
  }
  int n_nodes = 0, d_x = 0;
  std::uint64_t seed = 0;
  try {
    n_nodes = meta.at("n_nodes").get<int>();
    d_x = meta.at("d_x").get<int>();
    seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema_mismatch,
         std::string("checkpoint header incomplete: ") + e.what());
  }

  Model model(cfg, n_nodes, d_x, seed);
  const auto& entries = model.params_.entries();
  if (archive.params.size() != entries.size())
    fail(Errc::schema_mismatch, "checkpoint parameter count differs");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [want_name, tensor] = entries[i];
    const auto& [got_name, value] = archive.params[i];
    if (want_name != got_name)
      fail(Errc::schema_mismatch, "checkpoint parameter order differs at '" +
                                      got_name + "' (expected '" + want_name +
                                      "')");
    if (!value.same_shape(tensor->value))
      fail(Errc::schema_mismatch, "checkpoint shape differs for '" + got_name + "'");
    tensor->value = value;
  }
  return model;
}

}  // namespace tgl::models
