#include "tgl/layers.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "tgl/rng.hpp"

namespace tgl::nn {

Matrix glorot_uniform(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    fail(Errc::dimension_mismatch, "glorot_uniform needs positive dimensions");
  double limit = std::sqrt(6.0 / (rows + cols));
  rng::Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

Tensor ParamSet::insert(const std::string& name, Matrix init) {
  if (name.empty() || name.find_first_of(" \t\n\r") != std::string::npos)
    fail(Errc::config_error,
         "parameter name must be non-empty without whitespace: '" + name + "'");
  for (const auto& [existing, _] : entries_)
    if (existing == name)
      fail(Errc::config_error, "parameter '" + name + "' defined twice");
  Tensor t = parameter(std::move(init));
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamSet::weight(const std::string& name, int rows, int cols) {
  return insert(name, glorot_uniform(rows, cols, rng::derive_seed(base_seed_, name)));
}

Tensor ParamSet::bias(const std::string& name, int cols) {
  return insert(name, Matrix(1, cols));
}

Tensor ParamSet::matrix(const std::string& name, Matrix init) {
  return insert(name, std::move(init));
}

Tensor ParamSet::get(const std::string& name) const {
  for (const auto& [existing, t] : entries_)
    if (existing == name) return t;
  fail(Errc::config_error, "unknown parameter '" + name + "'");
}

std::size_t ParamSet::count_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t->value.size();
  return n;
}

std::vector<Matrix> ParamSet::snapshot_values() const {
  std::vector<Matrix> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t->value);
  return out;
}

void ParamSet::restore_values(const std::vector<Matrix>& values) {
  if (values.size() != entries_.size())
    fail(Errc::shape_mismatch, "parameter snapshot count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(entries_[i].second->value))
      fail(Errc::shape_mismatch, "parameter snapshot shape mismatch");
    entries_[i].second->value = values[i];
  }
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr <= 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 ||
      eps <= 0.0)
    fail(Errc::config_error, "Adam hyperparameters out of range");
}

void Adam::register_param(const Tensor& p) {
  for (const Tensor& existing : params_)
    if (existing.get() == p.get())
      fail(Errc::config_error, "parameter registered with Adam twice");
  params_.push_back(p);
  m_.emplace_back(p->value.rows(), p->value.cols());
  v_.emplace_back(p->value.rows(), p->value.cols());
}

void Adam::register_params(const ParamSet& params) {
  for (const auto& [_, t] : params.entries()) register_param(t);
}

void Adam::zero_grad() {
  for (const Tensor& p : params_) p->grad = Matrix();
}

void Adam::step() {
  ++t_;
  double corr1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double corr2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& value = params_[i]->value;
    const Matrix& grad = params_[i]->grad;
    bool has_grad = !grad.empty();
    if (has_grad && !grad.same_shape(value))
      fail(Errc::shape_mismatch, "gradient shape differs from parameter");
    for (std::size_t j = 0; j < value.size(); ++j) {
      double g = has_grad ? grad.data()[j] : 0.0;
      if (std::isnan(g) || std::isinf(g))
        fail(Errc::numerical_error, "non-finite gradient in Adam step");
      double& m = m_[i].data()[j];
      double& v = v_[i].data()[j];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      double mhat = m / corr1;
      double vhat = v / corr2;
      value.data()[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

Adam::Moments Adam::snapshot() const { return Moments{m_, v_, t_}; }

void Adam::restore(const Moments& s) {
  if (s.m.size() != params_.size() || s.v.size() != params_.size())
    fail(Errc::shape_mismatch, "optimizer snapshot size mismatch");
  m_ = s.m;
  v_ = s.v;
  t_ = s.t;
}

namespace {

// Dense per-snapshot weight map after min-max confidence normalization.
// Directed multigraphs are impossible upstream (duplicate edges rejected),
// so a plain map per ordered pair suffices.
std::unordered_map<std::uint64_t, double> normalized_weights(
    const std::vector<graph::Edge>& edges) {
  std::unordered_map<std::uint64_t, double> w;
  if (edges.empty()) return w;
  double lo = edges[0].confidence, hi = edges[0].confidence;
  for (const graph::Edge& e : edges) {
    lo = std::min(lo, e.confidence);
    hi = std::max(hi, e.confidence);
  }
  double span = hi - lo;
  for (const graph::Edge& e : edges) {
    double normalized = span > 0.0 ? (e.confidence - lo) / span : 1.0;
    w[graph::pair_key(e.src, e.dst)] = normalized;
  }
  return w;
}

}  // namespace

GraphOps build_graph_ops(const std::vector<graph::Edge>& edges, int n_nodes) {
  if (n_nodes < 1) fail(Errc::dimension_mismatch, "graph ops need >= 1 node");
  for (const graph::Edge& e : edges) {
    if (e.src < 0 || e.src >= n_nodes || e.dst < 0 || e.dst >= n_nodes)
      fail(Errc::id_out_of_range, "edge endpoint outside vocabulary");
    if (e.src == e.dst)
      fail(Errc::self_loop, "graph operators add their own self-loops");
  }

  GraphOps ops;
  ops.n_nodes = n_nodes;

  auto w = normalized_weights(edges);

  // A_sym[i,j] = max(w[i,j], w[j,i]) over unordered pairs.
  std::vector<std::tuple<int, int, double>> sym;
  for (const auto& [key, weight] : w) {
    int src = static_cast<int>(key >> 32);
    int dst = static_cast<int>(key & 0xffffffffu);
    if (src > dst) continue;  // handled from the (dst, src) entry
    double value = weight;
    auto rev = w.find(graph::pair_key(dst, src));
    if (rev != w.end()) value = std::max(value, rev->second);
    sym.emplace_back(src, dst, value);
    if (dst != src) sym.emplace_back(dst, src, value);
  }
  // Pairs present only in the (src > dst) direction.
  for (const auto& [key, weight] : w) {
    int src = static_cast<int>(key >> 32);
    int dst = static_cast<int>(key & 0xffffffffu);
    if (src <= dst) continue;
    if (w.count(graph::pair_key(dst, src))) continue;
    sym.emplace_back(src, dst, weight);
    sym.emplace_back(dst, src, weight);
  }

  std::vector<double> degree(n_nodes, 0.0);
  for (const auto& [i, j, value] : sym) {
    (void)j;
    degree[i] += value;
  }

  // -D^{-1/2} A_sym D^{-1/2}; zero-degree rows stay zero.
  std::vector<std::tuple<int, int, double>> lhat;
  lhat.reserve(sym.size());
  for (const auto& [i, j, value] : sym)
    if (degree[i] > 0.0 && degree[j] > 0.0)
      lhat.emplace_back(i, j, -value / std::sqrt(degree[i] * degree[j]));
  ops.cheb_lhat = std::make_shared<const Csr>(
      csr_from_triplets(n_nodes, n_nodes, std::move(lhat), true));

  // D~^{-1/2} (A_sym + I) D~^{-1/2}; the self-loop keeps every degree >= 1,
  // so isolated nodes get an exact identity row.
  std::vector<std::tuple<int, int, double>> norm;
  norm.reserve(sym.size() + n_nodes);
  std::vector<double> deg_tilde(degree);
  for (int i = 0; i < n_nodes; ++i) deg_tilde[i] += 1.0;
  for (const auto& [i, j, value] : sym)
    norm.emplace_back(i, j, value / std::sqrt(deg_tilde[i] * deg_tilde[j]));
  for (int i = 0; i < n_nodes; ++i) norm.emplace_back(i, i, 1.0 / deg_tilde[i]);
  ops.gcn_norm = std::make_shared<const Csr>(
      csr_from_triplets(n_nodes, n_nodes, std::move(norm), true));

  // Directed in-edge lists for attention, self-loops appended, sorted by
  // destination so segment ops see contiguous ascending ids.
  std::vector<std::pair<int, int>> att;  // (dst, src)
  att.reserve(edges.size() + n_nodes);
  for (const graph::Edge& e : edges) att.emplace_back(e.dst, e.src);
  for (int i = 0; i < n_nodes; ++i) att.emplace_back(i, i);
  std::sort(att.begin(), att.end());
  auto src_list = std::make_shared<std::vector<int>>();
  auto dst_list = std::make_shared<std::vector<int>>();
  src_list->reserve(att.size());
  dst_list->reserve(att.size());
  for (const auto& [dst, src] : att) {
    dst_list->push_back(dst);
    src_list->push_back(src);
  }
  ops.att_src = std::move(src_list);
  ops.att_dst = std::move(dst_list);
  return ops;
}

Tensor gcn_conv(const Tensor& x, const GraphOps& ops, const Tensor& w) {
  if (x->value.rows() != ops.n_nodes)
    fail(Errc::shape_mismatch, "gcn_conv: row count differs from node count");
  return spmm(ops.gcn_norm, matmul(x, w));
}

Tensor cheb_conv(const Tensor& x, const GraphOps& ops,
                 const std::vector<Tensor>& ws) {
  if (ws.empty()) fail(Errc::config_error, "cheb_conv needs K >= 1 weights");
  if (x->value.rows() != ops.n_nodes)
    fail(Errc::shape_mismatch, "cheb_conv: row count differs from node count");
  Tensor t_prev2 = x;  // T_0 X
  Tensor out = matmul(t_prev2, ws[0]);
  if (ws.size() == 1) return out;
  Tensor t_prev1 = spmm(ops.cheb_lhat, x);  // T_1 X
  out = add(out, matmul(t_prev1, ws[1]));
  for (std::size_t k = 2; k < ws.size(); ++k) {
    Tensor t_k = sub(affine(spmm(ops.cheb_lhat, t_prev1), 2.0, 0.0), t_prev2);
    out = add(out, matmul(t_k, ws[k]));
    t_prev2 = t_prev1;
    t_prev1 = t_k;
  }
  return out;
}

Tensor gat_conv(const Tensor& x, const GraphOps& ops,
                const std::vector<GatHead>& heads, double slope) {
  if (heads.empty()) fail(Errc::config_error, "gat_conv needs >= 1 head");
  if (x->value.rows() != ops.n_nodes)
    fail(Errc::shape_mismatch, "gat_conv: row count differs from node count");
  Tensor out;
  for (const GatHead& head : heads) {
    Tensor xw = matmul(x, head.w);
    Tensor score_src = matmul(xw, head.a_src);  // n x 1
    Tensor score_dst = matmul(xw, head.a_dst);
    Tensor logits = leaky_relu(
        add(gather_rows(score_src, ops.att_src),
            gather_rows(score_dst, ops.att_dst)),
        slope);
    Tensor att = segment_softmax(logits, ops.att_dst, ops.n_nodes);
    Tensor msg = scale_rows(gather_rows(xw, ops.att_src), att);
    Tensor head_out = segment_sum(msg, ops.att_dst, ops.n_nodes);
    out = out ? concat_cols(out, head_out) : head_out;
  }
  return out;
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p) {
  Tensor z = sigmoid(add_rowvec(
      add(matmul(x, p.wxz), matmul(h, p.whz)), p.bz));
  Tensor r = sigmoid(add_rowvec(
      add(matmul(x, p.wxr), matmul(h, p.whr)), p.br));
  Tensor hh = tanh_(add_rowvec(
      add(matmul(x, p.wxh), matmul(mul(r, h), p.whh)), p.bh));
  return add(mul(z, h), mul(affine(z, -1.0, 1.0), hh));
}

Tensor graph_gru_cell(const Tensor& x, const Tensor& h, const GraphOps& ops,
                      const GraphGruParams& p) {
  Tensor z = sigmoid(add_rowvec(
      add(cheb_conv(x, ops, p.wxz), cheb_conv(h, ops, p.whz)), p.bz));
  Tensor r = sigmoid(add_rowvec(
      add(cheb_conv(x, ops, p.wxr), cheb_conv(h, ops, p.whr)), p.br));
  Tensor hh = tanh_(add_rowvec(
      add(cheb_conv(x, ops, p.wxh), cheb_conv(mul(r, h), ops, p.whh)), p.bh));
  return add(mul(z, h), mul(affine(z, -1.0, 1.0), hh));
}

}  // namespace tgl::nn
