#include "tgl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tgl/kernels.hpp"

namespace tgl::nn {

namespace {

void check_finite(const Matrix& m, const char* op) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (std::isnan(p[i]) || std::isinf(p[i]))
      fail(Errc::numerical_error,
           std::string("non-finite value produced by op '") + op + "'");
}

Tensor make(const char* op, Matrix value, std::vector<Tensor> parents,
            std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = std::move(value);
  check_finite(n->value, op);
  for (const Tensor& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

// Sizes and zeroes the gradient buffer on first touch within a backward
// pass; backward() resets buffers by shrinking them beforehand.
Matrix& grad_of(const Tensor& t) {
  if (t->grad.rows() != t->value.rows() || t->grad.cols() != t->value.cols())
    t->grad = Matrix(t->value.rows(), t->value.cols());
  return t->grad;
}

bool wants(const Tensor& t) { return t->requires_grad; }

void same_shape_or_die(const Tensor& a, const Tensor& b, const char* op) {
  if (!a->value.same_shape(b->value))
    fail(Errc::shape_mismatch, std::string(op) + ": operand shapes differ (" +
                                   std::to_string(a->value.rows()) + "x" +
                                   std::to_string(a->value.cols()) + " vs " +
                                   std::to_string(b->value.rows()) + "x" +
                                   std::to_string(b->value.cols()) + ")");
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor constant(Matrix v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  check_finite(n->value, "constant");
  return n;
}

Tensor parameter(Matrix v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  n->op = "parameter";
  check_finite(n->value, "parameter");
  return n;
}

void backward(const Tensor& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    fail(Errc::shape_mismatch, "backward root must be a scalar");
  if (!root->requires_grad) return;

  // Iterative post-order DFS over the requires_grad subgraph.
  std::vector<Tensor> order;
  std::unordered_set<const Node*> done;
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.push_back({root, 0});
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (done.count(node.get())) {
      stack.pop_back();
      continue;
    }
    bool descended = false;
    while (next < node->parents.size()) {
      const Tensor& p = node->parents[next++];
      if (p->requires_grad && !done.count(p.get())) {
        stack.push_back({p, 0});
        descended = true;
        break;
      }
    }
    if (descended) continue;
    done.insert(node.get());
    order.push_back(node);
    stack.pop_back();
  }

  for (const Tensor& t : order) t->grad = Matrix();  // force fresh zero buffers
  grad_of(root)(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape_or_die(a, b, "add");
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] += b->value.data()[i];
  return make("add", std::move(v), {a, b}, [a, b](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
    }
    if (wants(b)) {
      Matrix& g = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape_or_die(a, b, "sub");
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] -= b->value.data()[i];
  return make("sub", std::move(v), {a, b}, [a, b](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
    }
    if (wants(b)) {
      Matrix& g = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] -= n.grad.data()[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape_or_die(a, b, "mul");
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] *= b->value.data()[i];
  return make("mul", std::move(v), {a, b}, [a, b](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        g.data()[i] += n.grad.data()[i] * b->value.data()[i];
    }
    if (wants(b)) {
      Matrix& g = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i)
        g.data()[i] += n.grad.data()[i] * a->value.data()[i];
    }
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
  if (bias->value.rows() != 1 || bias->value.cols() != a->value.cols())
    fail(Errc::shape_mismatch, "add_rowvec: bias must be 1 x cols(a)");
  Matrix v = a->value;
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) v(i, j) += bias->value(0, j);
  return make("add_rowvec", std::move(v), {a, bias}, [a, bias](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
    }
    if (wants(bias)) {
      Matrix& g = grad_of(bias);
      for (int i = 0; i < n.grad.rows(); ++i)
        for (int j = 0; j < n.grad.cols(); ++j) g(0, j) += n.grad(i, j);
    }
  });
}

Tensor affine(const Tensor& a, double k, double b) {
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = k * v.data()[i] + b;
  return make("affine", std::move(v), {a}, [a, k](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += k * n.grad.data()[i];
  });
}

Tensor transpose(const Tensor& a) {
  Matrix v(a->value.cols(), a->value.rows());
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) v(i, j) = a->value(j, i);
  return make("transpose", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (int i = 0; i < n.grad.rows(); ++i)
      for (int j = 0; j < n.grad.cols(); ++j) g(j, i) += n.grad(i, j);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a->value.cols() != b->value.rows())
    fail(Errc::shape_mismatch, "matmul: inner dimensions differ");
  Matrix v;
  kernels::matmul(a->value, b->value, v);
  return make("matmul", std::move(v), {a, b}, [a, b](Node& n) {
    if (wants(a)) {
      Matrix da;
      kernels::matmul(n.grad, b->value, da, false, true);
      Matrix& g = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += da.data()[i];
    }
    if (wants(b)) {
      Matrix db;
      kernels::matmul(a->value, n.grad, db, true, false);
      Matrix& g = grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += db.data()[i];
    }
  });
}

Tensor spmm(std::shared_ptr<const Csr> s, const Tensor& x) {
  if (!s->symmetric)
    fail(Errc::asymmetric_adjacency,
         "spmm requires a symmetric operator (backward reuses it untransposed)");
  if (s->cols != x->value.rows())
    fail(Errc::shape_mismatch, "spmm: inner dimensions differ");
  Matrix v;
  kernels::spmm(*s, x->value, v);
  return make("spmm", std::move(v), {x}, [s, x](Node& n) {
    if (!wants(x)) return;
    Matrix dx;
    kernels::spmm(*s, n.grad, dx);
    Matrix& g = grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += dx.data()[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a->value.rows() != b->value.rows())
    fail(Errc::shape_mismatch, "concat_cols: row counts differ");
  int ca = a->value.cols(), cb = b->value.cols();
  Matrix v(a->value.rows(), ca + cb);
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < ca; ++j) v(i, j) = a->value(i, j);
    for (int j = 0; j < cb; ++j) v(i, ca + j) = b->value(i, j);
  }
  return make("concat_cols", std::move(v), {a, b}, [a, b, ca, cb](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < ca; ++j) g(i, j) += n.grad(i, j);
    }
    if (wants(b)) {
      Matrix& g = grad_of(b);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < cb; ++j) g(i, j) += n.grad(i, ca + j);
    }
  });
}

Tensor slice_cols(const Tensor& a, int start, int len) {
  if (start < 0 || len < 1 || start + len > a->value.cols())
    fail(Errc::shape_mismatch, "slice_cols: range outside matrix");
  Matrix v(a->value.rows(), len);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < len; ++j) v(i, j) = a->value(i, start + j);
  return make("slice_cols", std::move(v), {a}, [a, start, len](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (int i = 0; i < n.grad.rows(); ++i)
      for (int j = 0; j < len; ++j) g(i, start + j) += n.grad(i, j);
  });
}

Tensor gather_rows(const Tensor& a, std::shared_ptr<const std::vector<int>> idx) {
  for (int i : *idx)
    if (i < 0 || i >= a->value.rows())
      fail(Errc::id_out_of_range, "gather_rows: index outside matrix");
  Matrix v(static_cast<int>(idx->size()), a->value.cols());
  for (std::size_t r = 0; r < idx->size(); ++r)
    for (int j = 0; j < v.cols(); ++j)
      v(static_cast<int>(r), j) = a->value((*idx)[r], j);
  return make("gather_rows", std::move(v), {a}, [a, idx](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t r = 0; r < idx->size(); ++r)
      for (int j = 0; j < n.grad.cols(); ++j)
        g((*idx)[r], j) += n.grad(static_cast<int>(r), j);
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
  if (v->value.cols() != 1 || v->value.rows() != a->value.rows())
    fail(Errc::shape_mismatch, "scale_rows: scale must be rows(a) x 1");
  Matrix out = a->value;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= v->value(i, 0);
  return make("scale_rows", std::move(out), {a, v}, [a, v](Node& n) {
    if (wants(a)) {
      Matrix& g = grad_of(a);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j)
          g(i, j) += n.grad(i, j) * v->value(i, 0);
    }
    if (wants(v)) {
      Matrix& g = grad_of(v);
      for (int i = 0; i < n.grad.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < n.grad.cols(); ++j)
          acc += n.grad(i, j) * a->value(i, j);
        g(i, 0) += acc;
      }
    }
  });
}

namespace {

void check_segments(const std::vector<int>& seg, int rows, int n_segments) {
  if (static_cast<int>(seg.size()) != rows)
    fail(Errc::shape_mismatch, "segment op: one segment id per row required");
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] < 0 || seg[i] >= n_segments)
      fail(Errc::id_out_of_range, "segment id outside range");
    if (i > 0 && seg[i] < seg[i - 1])
      fail(Errc::shape_mismatch, "segment ids must be ascending");
  }
}

}  // namespace

Tensor segment_sum(const Tensor& a, std::shared_ptr<const std::vector<int>> seg,
                   int n_segments) {
  check_segments(*seg, a->value.rows(), n_segments);
  Matrix v(n_segments, a->value.cols());
  for (int r = 0; r < a->value.rows(); ++r)
    for (int j = 0; j < v.cols(); ++j) v((*seg)[r], j) += a->value(r, j);
  return make("segment_sum", std::move(v), {a}, [a, seg](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (int r = 0; r < g.rows(); ++r)
      for (int j = 0; j < g.cols(); ++j) g(r, j) += n.grad((*seg)[r], j);
  });
}

Tensor segment_softmax(const Tensor& a,
                       std::shared_ptr<const std::vector<int>> seg,
                       int n_segments) {
  if (a->value.cols() != 1)
    fail(Errc::shape_mismatch, "segment_softmax expects an n x 1 input");
  check_segments(*seg, a->value.rows(), n_segments);
  int n = a->value.rows();
  Matrix v(n, 1);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && (*seg)[j + 1] == (*seg)[i]) ++j;
    double mx = a->value(i, 0);
    for (int k = i; k <= j; ++k) mx = std::max(mx, a->value(k, 0));
    double z = 0.0;
    for (int k = i; k <= j; ++k) z += std::exp(a->value(k, 0) - mx);
    for (int k = i; k <= j; ++k) v(k, 0) = std::exp(a->value(k, 0) - mx) / z;
    i = j + 1;
  }
  return make("segment_softmax", std::move(v), {a}, [a, seg](Node& n_) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    int n = n_.value.rows();
    int i = 0;
    while (i < n) {
      int j = i;
      while (j + 1 < n && (*seg)[j + 1] == (*seg)[i]) ++j;
      double dot = 0.0;
      for (int k = i; k <= j; ++k) dot += n_.value(k, 0) * n_.grad(k, 0);
      for (int k = i; k <= j; ++k)
        g(k, 0) += n_.value(k, 0) * (n_.grad(k, 0) - dot);
      i = j + 1;
    }
  });
}

Tensor row_softmax(const Tensor& a) {
  Matrix v = a->value;
  for (int i = 0; i < v.rows(); ++i) {
    double mx = v(i, 0);
    for (int j = 0; j < v.cols(); ++j) mx = std::max(mx, v(i, j));
    double z = 0.0;
    for (int j = 0; j < v.cols(); ++j) z += std::exp(v(i, j) - mx);
    for (int j = 0; j < v.cols(); ++j) v(i, j) = std::exp(v(i, j) - mx) / z;
  }
  return make("row_softmax", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (int i = 0; i < n.value.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < n.value.cols(); ++j) dot += n.value(i, j) * n.grad(i, j);
      for (int j = 0; j < n.value.cols(); ++j)
        g(i, j) += n.value(i, j) * (n.grad(i, j) - dot);
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = stable_sigmoid(v.data()[i]);
  return make("sigmoid", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double y = n.value.data()[i];
      g.data()[i] += n.grad.data()[i] * y * (1.0 - y);
    }
  });
}

Tensor tanh_(const Tensor& a) {
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::tanh(v.data()[i]);
  return make("tanh", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double y = n.value.data()[i];
      g.data()[i] += n.grad.data()[i] * (1.0 - y * y);
    }
  });
}

Tensor relu(const Tensor& a) {
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::max(v.data()[i], 0.0);
  return make("relu", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (a->value.data()[i] > 0.0) g.data()[i] += n.grad.data()[i];
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.data()[i] < 0.0) v.data()[i] *= slope;
  return make("leaky_relu", std::move(v), {a}, [a, slope](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += n.grad.data()[i] * (a->value.data()[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor dropout(const Tensor& a, double p, rng::Rng& rng) {
  if (p < 0.0 || p >= 1.0)
    fail(Errc::config_error, "dropout probability must lie in [0, 1)");
  if (p == 0.0) return a;
  double keep = 1.0 - p;
  auto mask = std::make_shared<Matrix>(a->value.rows(), a->value.cols());
  Matrix v = a->value;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double m = rng.uniform() < p ? 0.0 : 1.0 / keep;
    mask->data()[i] = m;
    v.data()[i] *= m;
  }
  return make("dropout", std::move(v), {a}, [a, mask](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += n.grad.data()[i] * mask->data()[i];
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) acc += a->value.data()[i];
  Matrix v(1, 1);
  v(0, 0) = acc;
  return make("sum", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad(0, 0);
  });
}

Tensor mean(const Tensor& a) {
  if (a->value.size() == 0) fail(Errc::empty_input, "mean of empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) acc += a->value.data()[i];
  Matrix v(1, 1);
  v(0, 0) = acc / a->value.size();
  double inv = 1.0 / a->value.size();
  return make("mean", std::move(v), {a}, [a, inv](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad(0, 0) * inv;
  });
}

Tensor row_sum(const Tensor& a) {
  Matrix v(a->value.rows(), 1);
  for (int i = 0; i < a->value.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < a->value.cols(); ++j) acc += a->value(i, j);
    v(i, 0) = acc;
  }
  return make("row_sum", std::move(v), {a}, [a](Node& n) {
    if (!wants(a)) return;
    Matrix& g = grad_of(a);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) g(i, j) += n.grad(i, 0);
  });
}

Tensor mse(const Tensor& pred, const Matrix& target) {
  if (!pred->value.same_shape(target))
    fail(Errc::shape_mismatch, "mse: prediction and target shapes differ");
  if (pred->value.size() == 0) fail(Errc::empty_input, "mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    double d = pred->value.data()[i] - target.data()[i];
    acc += d * d;
  }
  Matrix v(1, 1);
  v(0, 0) = acc / target.size();
  auto tgt = std::make_shared<Matrix>(target);
  return make("mse", std::move(v), {pred}, [pred, tgt](Node& n) {
    if (!wants(pred)) return;
    Matrix& g = grad_of(pred);
    double scale = 2.0 / tgt->size() * n.grad(0, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += scale * (pred->value.data()[i] - tgt->data()[i]);
  });
}

Tensor bce_with_logits(const Tensor& logits, const Matrix& labels) {
  if (!logits->value.same_shape(labels))
    fail(Errc::shape_mismatch, "bce_with_logits: logit and label shapes differ");
  if (logits->value.size() == 0)
    fail(Errc::empty_input, "bce_with_logits of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double z = logits->value.data()[i];
    double y = labels.data()[i];
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  Matrix v(1, 1);
  v(0, 0) = acc / labels.size();
  auto lbl = std::make_shared<Matrix>(labels);
  return make("bce_with_logits", std::move(v), {logits}, [logits, lbl](Node& n) {
    if (!wants(logits)) return;
    Matrix& g = grad_of(logits);
    double scale = n.grad(0, 0) / lbl->size();
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] += scale * (stable_sigmoid(logits->value.data()[i]) -
                              lbl->data()[i]);
  });
}

}  // namespace tgl::nn
