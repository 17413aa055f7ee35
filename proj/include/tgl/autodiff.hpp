#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tgl/matrix.hpp"
#include "tgl/rng.hpp"

namespace tgl::nn {

// Reverse-mode tape node. Tensors are shared_ptr<Node>; an expression
// builds a DAG whose backward() pass accumulates exact gradients into
// every node with requires_grad set. Every op validates shapes before and
// value finiteness after computing (NaN/Inf raises NumericalError), so a
// diverging training step surfaces at the op that produced it.
struct Node {
  Matrix value;
  Matrix grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // scatters node.grad into parents
  const char* op = "leaf";
};

using Tensor = std::shared_ptr<Node>;

Tensor constant(Matrix v);
Tensor parameter(Matrix v);  // leaf with requires_grad

// Seeds d(root)/d(root) = 1 and runs the tape in reverse topological
// order. root must be 1x1. Grads of reachable nodes are reset first, so
// each backward call stands alone; parameter grads must be consumed (or
// zeroed via the optimizer) before the next call.
void backward(const Tensor& root);

// Elementwise and structural ops.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& a, const Tensor& bias);  // bias is 1 x c
Tensor affine(const Tensor& a, double k, double b);      // k*a + b
Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor spmm(std::shared_ptr<const Csr> s, const Tensor& x);  // s is constant
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int start, int len);
Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<int>> idx);
Tensor scale_rows(const Tensor& a, const Tensor& v);  // v is n x 1

// seg maps each row of a to a segment id; rows of equal id must be
// contiguous and ids ascending (callers sort edges by destination).
Tensor segment_sum(const Tensor& a, std::shared_ptr<const std::vector<int>> seg,
                   int n_segments);
Tensor segment_softmax(const Tensor& a,
                       std::shared_ptr<const std::vector<int>> seg,
                       int n_segments);  // a is n x 1

Tensor row_softmax(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

// Inverted dropout; the mask is drawn from rng at call time. p = 0 is the
// identity (no tape node).
Tensor dropout(const Tensor& a, double p, rng::Rng& rng);

Tensor sum(const Tensor& a);   // 1 x 1
Tensor mean(const Tensor& a);  // 1 x 1
Tensor row_sum(const Tensor& a);  // n x 1

Tensor mse(const Tensor& pred, const Matrix& target);             // 1 x 1
Tensor bce_with_logits(const Tensor& logits, const Matrix& labels);  // 1 x 1

}  // namespace tgl::nn
