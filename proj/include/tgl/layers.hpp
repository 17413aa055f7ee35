#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tgl/autodiff.hpp"
#include "tgl/graph.hpp"
#include "tgl/matrix.hpp"

namespace tgl::nn {

// Glorot/Xavier uniform draw on [-sqrt(6/(fan_in+fan_out)), +...].
Matrix glorot_uniform(int rows, int cols, std::uint64_t seed);

// Named parameter registry. Creation order is the archive order, and each
// name derives its own RNG stream from the set's base seed, so adding a
// parameter never reshuffles the initialization of existing ones.
class ParamSet {
 public:
  explicit ParamSet(std::uint64_t base_seed) : base_seed_(base_seed) {}

  Tensor weight(const std::string& name, int rows, int cols);  // glorot
  Tensor bias(const std::string& name, int cols);              // zeros, 1 x cols
  Tensor matrix(const std::string& name, Matrix init);         // explicit values

  Tensor get(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  std::size_t count_scalars() const;

  std::vector<Matrix> snapshot_values() const;
  void restore_values(const std::vector<Matrix>& values);

 private:
  Tensor insert(const std::string& name, Matrix init);

  std::uint64_t base_seed_;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Bias-corrected Adam. Parameters register exactly once; a second
// registration of the same tensor is a configuration bug and throws.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void register_params(const ParamSet& params);
  void register_param(const Tensor& p);

  void zero_grad();
  void step();  // consumes current grads; empty grad reads as zero

  // Moment state for divergence rollback. Values of the parameters
  // themselves are snapshotted separately via ParamSet.
  struct Moments {
    std::vector<Matrix> m, v;
    long t = 0;
  };
  Moments snapshot() const;
  void restore(const Moments& s);

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> params_;
  std::vector<Matrix> m_, v_;
};

// Snapshot-derived operators shared by every graph layer. Edge confidences
// are min-max normalized to [0,1] per snapshot (a single distinct value
// maps to 1.0), the directed graph is symmetrized as
// A_sym[i,j] = max(w[i,j], w[j,i]) for the spectral operators, and the
// attention lists keep the original direction (in-edges per destination,
// self-loops added, confidences unused).
struct GraphOps {
  int n_nodes = 0;
  std::shared_ptr<const Csr> gcn_norm;   // D~^{-1/2} (A_sym + I) D~^{-1/2}
  std::shared_ptr<const Csr> cheb_lhat;  // -D^{-1/2} A_sym D^{-1/2}  (lambda_max = 2)
  std::shared_ptr<const std::vector<int>> att_src;  // edge sources, sorted by dst
  std::shared_ptr<const std::vector<int>> att_dst;  // destinations, ascending
};

GraphOps build_graph_ops(const std::vector<graph::Edge>& edges, int n_nodes);

// P X W with P the self-loop-normalized adjacency.
Tensor gcn_conv(const Tensor& x, const GraphOps& ops, const Tensor& w);

// sum_k T_k(L^) X W_k; T_0 = I, T_1 = L^, T_k = 2 L^ T_{k-1} - T_{k-2}.
Tensor cheb_conv(const Tensor& x, const GraphOps& ops,
                 const std::vector<Tensor>& ws);

struct GatHead {
  Tensor w;      // d x d_head
  Tensor a_src;  // d_head x 1, attention vector half applied to the source
  Tensor a_dst;  // d_head x 1, half applied to the destination
};

// Per-edge logits leaky_relu(a.[Wx_i || Wx_j]) softmaxed over each node's
// in-neighborhood (self-loop included); head outputs concatenated.
Tensor gat_conv(const Tensor& x, const GraphOps& ops,
                const std::vector<GatHead>& heads, double slope = 0.2);

struct GruParams {
  Tensor wxz, whz, bz;
  Tensor wxr, whr, br;
  Tensor wxh, whh, bh;
};

// Row-batched GRU: z = sig(xWxz + hWhz + bz), r likewise,
// h^ = tanh(xWxh + (r*h)Whh + bh), h' = z*h + (1-z)*h^.
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& p);

struct GraphGruParams {
  std::vector<Tensor> wxz, whz, wxr, whr, wxh, whh;  // cheb stacks, size K
  Tensor bz, br, bh;
};

// GRU with every linear map replaced by a Chebyshev graph convolution.
Tensor graph_gru_cell(const Tensor& x, const Tensor& h, const GraphOps& ops,
                      const GraphGruParams& p);

}  // namespace tgl::nn
