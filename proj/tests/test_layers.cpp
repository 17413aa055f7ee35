#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "tgl/layers.hpp"
#include "tgl/rng.hpp"

namespace nn = tgl::nn;
using test_support::kGradTol;
using test_support::max_grad_error;
using tgl::Errc;
using tgl::Error;
using tgl::Matrix;
using tgl::graph::Edge;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  tgl::rng::Rng rng(seed);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<Edge> random_edges(int n, double density, std::uint64_t seed) {
  tgl::rng::Rng rng(seed);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density)
        edges.push_back({i, j, rng.uniform(0.0, 5.0)});
  return edges;
}

Matrix naive_mm(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

// Independent dense reconstruction of the two spectral operators:
// min-max confidence normalization, max-symmetrization, then
// P = D~^{-1/2}(A+I)D~^{-1/2} and Lhat = -D^{-1/2} A D^{-1/2}.
struct DenseOps {
  Matrix p;
  Matrix lhat;
};

DenseOps dense_ops(const std::vector<Edge>& edges, int n) {
  Matrix a(n, n);
  if (!edges.empty()) {
    double lo = edges[0].confidence, hi = edges[0].confidence;
    for (const Edge& e : edges) {
      lo = std::min(lo, e.confidence);
      hi = std::max(hi, e.confidence);
    }
    for (const Edge& e : edges) {
      double w = hi > lo ? (e.confidence - lo) / (hi - lo) : 1.0;
      a(e.src, e.dst) = w;
    }
  }
  Matrix sym(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sym(i, j) = std::max(a(i, j), a(j, i));

  DenseOps ops{Matrix(n, n), Matrix(n, n)};
  std::vector<double> deg(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[i] += sym(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (deg[i] > 0.0 && deg[j] > 0.0)
        ops.lhat(i, j) = -sym(i, j) / std::sqrt(deg[i] * deg[j]);
  for (int i = 0; i < n; ++i) sym(i, i) += 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      ops.p(i, j) = sym(i, j) / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0));
  return ops;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("glorot draws stay inside the limit and depend on the seed") {
  Matrix w = nn::glorot_uniform(30, 20, 9);
  double limit = std::sqrt(6.0 / 50.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w.data()[i] <= limit);
    CHECK(w.data()[i] >= -limit);
  }
  CHECK(w == nn::glorot_uniform(30, 20, 9));
  CHECK_FALSE(w == nn::glorot_uniform(30, 20, 10));
}

TEST_CASE("ParamSet rejects duplicate names and unknown lookups") {
  nn::ParamSet params(3);
  params.weight("w", 4, 4);
  CHECK_THROWS_AS(params.weight("w", 4, 4), Error);
  CHECK_THROWS_AS(params.get("nope"), Error);
  CHECK_THROWS_AS(params.weight("has space", 2, 2), Error);
}

TEST_CASE("ParamSet seed streams are per-name, not per-order") {
  nn::ParamSet a(11), b(11);
  a.weight("first", 3, 3);
  Matrix wa = a.weight("shared", 3, 3)->value;
  Matrix wb = b.weight("shared", 3, 3)->value;  // no 'first' created before
  CHECK(wa == wb);
}

TEST_CASE("spectral operators match the dense oracle") {
  int n = 12;
  auto edges = random_edges(n, 0.25, 21);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  DenseOps oracle = dense_ops(edges, n);
  CHECK(max_abs_diff(tgl::csr_to_dense(*ops.gcn_norm), oracle.p) < 1e-12);
  CHECK(max_abs_diff(tgl::csr_to_dense(*ops.cheb_lhat), oracle.lhat) < 1e-12);
}

TEST_CASE("a single distinct confidence value normalizes to weight 1") {
  std::vector<Edge> edges{{0, 1, 7.5}, {1, 2, 7.5}};
  nn::GraphOps ops = nn::build_graph_ops(edges, 3);
  Matrix a = tgl::csr_to_dense(*ops.cheb_lhat);
  // deg(1) = 2, deg(0) = deg(2) = 1 under unit weights
  CHECK(a(0, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("gcn_conv with no edges and identity weights is the identity") {
  Matrix x = random_matrix(6, 6, 30);
  nn::GraphOps ops = nn::build_graph_ops({}, 6);
  nn::Tensor out = nn::gcn_conv(nn::constant(x), ops, nn::constant(identity(6)));
  CHECK(out->value == x);
}

TEST_CASE("gcn_conv treats disconnected pairs independently") {
  std::vector<Edge> edges{{0, 1, 1.0}, {2, 3, 1.0}};
  nn::GraphOps ops = nn::build_graph_ops(edges, 4);
  Matrix w = random_matrix(3, 2, 40);
  Matrix x1 = random_matrix(4, 3, 41);
  Matrix x2 = x1;
  x2(2, 0) += 5.0;  // perturb only the second pair
  x2(3, 1) -= 2.0;
  Matrix o1 = nn::gcn_conv(nn::constant(x1), ops, nn::constant(w))->value;
  Matrix o2 = nn::gcn_conv(nn::constant(x2), ops, nn::constant(w))->value;
  for (int j = 0; j < 2; ++j) {
    CHECK(o1(0, j) == o2(0, j));
    CHECK(o1(1, j) == o2(1, j));
    CHECK(o1(2, j) != o2(2, j));
  }
}

TEST_CASE("gcn_conv matches the dense oracle on a random graph") {
  int n = 11;
  auto edges = random_edges(n, 0.3, 50);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, 5, 51);
  Matrix w = random_matrix(5, 4, 52);
  Matrix expected = naive_mm(dense_ops(edges, n).p, naive_mm(x, w));
  Matrix got = nn::gcn_conv(nn::constant(x), ops, nn::constant(w))->value;
  CHECK(max_abs_diff(got, expected) < 1e-10);
}

TEST_CASE("cheb_conv with K=1 is a plain linear map") {
  int n = 8;
  auto edges = random_edges(n, 0.3, 60);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, 4, 61);
  Matrix w = random_matrix(4, 3, 62);
  Matrix got =
      nn::cheb_conv(nn::constant(x), ops, {nn::constant(w)})->value;
  CHECK(max_abs_diff(got, naive_mm(x, w)) < 1e-12);
}

TEST_CASE("cheb_conv on an empty graph collapses to the T_0 term at K=2") {
  // Lhat = 0 when A = 0 (lambda_max fixed at 2), so the K=2 stack reduces
  // to X W_0: the T_1 contribution vanishes.
  nn::GraphOps ops = nn::build_graph_ops({}, 7);
  Matrix x = random_matrix(7, 4, 70);
  Matrix w0 = random_matrix(4, 3, 71);
  Matrix w1 = random_matrix(4, 3, 72);
  Matrix got = nn::cheb_conv(nn::constant(x), ops,
                             {nn::constant(w0), nn::constant(w1)})
                   ->value;
  CHECK(max_abs_diff(got, naive_mm(x, w0)) < 1e-14);
}

TEST_CASE("cheb_conv K=3 matches the dense polynomial oracle") {
  int n = 10;
  auto edges = random_edges(n, 0.35, 80);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, 4, 81);
  std::vector<Matrix> w{random_matrix(4, 3, 82), random_matrix(4, 3, 83),
                        random_matrix(4, 3, 84)};
  Matrix lhat = dense_ops(edges, n).lhat;

  Matrix t0 = x;
  Matrix t1 = naive_mm(lhat, x);
  Matrix t2 = naive_mm(lhat, t1);
  for (std::size_t i = 0; i < t2.size(); ++i)
    t2.data()[i] = 2.0 * t2.data()[i] - t0.data()[i];
  Matrix expected = naive_mm(t0, w[0]);
  Matrix e1 = naive_mm(t1, w[1]);
  Matrix e2 = naive_mm(t2, w[2]);
  for (std::size_t i = 0; i < expected.size(); ++i)
    expected.data()[i] += e1.data()[i] + e2.data()[i];

  Matrix got = nn::cheb_conv(nn::constant(x), ops,
                             {nn::constant(w[0]), nn::constant(w[1]),
                              nn::constant(w[2])})
                   ->value;
  CHECK(max_abs_diff(got, expected) < 1e-10);
}

TEST_CASE("gcn and cheb are equivariant to node permutation") {
  int n = 9;
  auto edges = random_edges(n, 0.3, 90);
  Matrix x = random_matrix(n, 4, 91);
  Matrix w = random_matrix(4, 4, 92);

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  tgl::rng::Rng rng(93);
  rng.shuffle(perm);  // perm[i] = new id of old node i

  std::vector<Edge> pedges;
  for (const Edge& e : edges)
    pedges.push_back({perm[e.src], perm[e.dst], e.confidence});
  Matrix px(n, 4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j) px(perm[i], j) = x(i, j);

  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  nn::GraphOps pops = nn::build_graph_ops(pedges, n);

  Matrix base = nn::cheb_conv(nn::constant(x), ops,
                              {nn::constant(w), nn::constant(w)})
                    ->value;
  Matrix permuted = nn::cheb_conv(nn::constant(px), pops,
                                  {nn::constant(w), nn::constant(w)})
                        ->value;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(permuted(perm[i], j) == doctest::Approx(base(i, j)).epsilon(1e-12));

  Matrix gbase = nn::gcn_conv(nn::constant(x), ops, nn::constant(w))->value;
  Matrix gperm = nn::gcn_conv(nn::constant(px), pops, nn::constant(w))->value;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(gperm(perm[i], j) == doctest::Approx(gbase(i, j)).epsilon(1e-12));
}

TEST_CASE("gat: an isolated node attends only to itself, weight exactly 1") {
  std::vector<Edge> edges{{0, 1, 1.0}};  // node 2 isolated
  nn::GraphOps ops = nn::build_graph_ops(edges, 3);
  Matrix x = random_matrix(3, 4, 100);
  nn::GatHead head{nn::constant(random_matrix(4, 3, 101)),
                   nn::constant(random_matrix(3, 1, 102)),
                   nn::constant(random_matrix(3, 1, 103))};
  Matrix out = nn::gat_conv(nn::constant(x), ops, {head})->value;
  Matrix xw = naive_mm(x, head.w->value);
  for (int j = 0; j < 3; ++j)
    CHECK(out(2, j) == doctest::Approx(xw(2, j)).epsilon(1e-14));
}

TEST_CASE("gat: attention weights sum to 1 over every in-neighborhood") {
  // Second feature column is constant 1 and W = I, so output column 1
  // equals the sum of attention weights per destination. Column 0 varies,
  // so the weights themselves are heterogeneous.
  int n = 7;
  auto edges = random_edges(n, 0.4, 110);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x(n, 2);
  tgl::rng::Rng rng(111);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 1.0;
  }
  Matrix a_src = Matrix::from_rows({{1.0}, {0.0}});
  Matrix a_dst = Matrix::from_rows({{0.7}, {0.0}});
  nn::GatHead head{nn::constant(identity(2)), nn::constant(a_src),
                   nn::constant(a_dst)};
  Matrix out = nn::gat_conv(nn::constant(x), ops, {head})->value;
  for (int i = 0; i < n; ++i)
    CHECK(out(i, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gat: swapping two identical-feature neighbors changes nothing") {
  Matrix x = random_matrix(4, 3, 120);
  for (int j = 0; j < 3; ++j) x(2, j) = x(1, j);  // nodes 1 and 2 identical
  std::vector<Edge> fwd{{1, 0, 1.0}, {2, 0, 2.0}, {3, 1, 1.5}};
  std::vector<Edge> swapped{{2, 0, 1.0}, {1, 0, 2.0}, {3, 2, 1.5}};
  // note: confidences differ per edge but GAT ignores them entirely
  nn::GatHead head{nn::constant(random_matrix(3, 2, 121)),
                   nn::constant(random_matrix(2, 1, 122)),
                   nn::constant(random_matrix(2, 1, 123))};
  Matrix a = nn::gat_conv(nn::constant(x), nn::build_graph_ops(fwd, 4), {head})
                 ->value;
  Matrix b = nn::gat_conv(nn::constant(x), nn::build_graph_ops(swapped, 4),
                          {head})
                 ->value;
  for (int j = 0; j < 2; ++j) {
    CHECK(a(0, j) == doctest::Approx(b(0, j)).epsilon(1e-13));
    // node 3 targets 1 before the swap and the feature-identical 2 after
    CHECK(a(1, j) == doctest::Approx(b(2, j)).epsilon(1e-13));
  }
}

TEST_CASE("gat: heads concatenate in order") {
  int n = 5;
  auto edges = random_edges(n, 0.4, 130);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, 3, 131);
  nn::GatHead h1{nn::constant(random_matrix(3, 2, 132)),
                 nn::constant(random_matrix(2, 1, 133)),
                 nn::constant(random_matrix(2, 1, 134))};
  nn::GatHead h2{nn::constant(random_matrix(3, 2, 135)),
                 nn::constant(random_matrix(2, 1, 136)),
                 nn::constant(random_matrix(2, 1, 137))};
  Matrix both = nn::gat_conv(nn::constant(x), ops, {h1, h2})->value;
  Matrix first = nn::gat_conv(nn::constant(x), ops, {h1})->value;
  Matrix second = nn::gat_conv(nn::constant(x), ops, {h2})->value;
  REQUIRE(both.cols() == 4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(both(i, j) == first(i, j));
      CHECK(both(i, 2 + j) == second(i, j));
    }
}

TEST_CASE("gat gradients match finite differences") {
  int n = 6;
  auto edges = random_edges(n, 0.4, 140);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, 3, 141);
  auto build = [&ops, x](const std::vector<nn::Tensor>& p) {
    nn::GatHead head{p[0], p[1], p[2]};
    return nn::mean(nn::tanh_(nn::gat_conv(nn::constant(x), ops, {head})));
  };
  std::vector<nn::Tensor> params{nn::parameter(random_matrix(3, 2, 142)),
                                 nn::parameter(random_matrix(2, 1, 143)),
                                 nn::parameter(random_matrix(2, 1, 144))};
  CHECK(max_grad_error(build, params) < kGradTol);
}

TEST_CASE("gru_cell zero fixture: everything zero gives zero state") {
  int d = 4;
  nn::GruParams p;
  p.wxz = nn::constant(Matrix(d, d));
  p.whz = nn::constant(Matrix(d, d));
  p.bz = nn::constant(Matrix(1, d));
  p.wxr = nn::constant(Matrix(d, d));
  p.whr = nn::constant(Matrix(d, d));
  p.br = nn::constant(Matrix(1, d));
  p.wxh = nn::constant(Matrix(d, d));
  p.whh = nn::constant(Matrix(d, d));
  p.bh = nn::constant(Matrix(1, d));
  Matrix out =
      nn::gru_cell(nn::constant(Matrix(3, d)), nn::constant(Matrix(3, d)), p)
          ->value;
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("gru_cell with saturated update gate carries the state") {
  int d = 3;
  nn::GruParams p;
  p.wxz = nn::constant(Matrix(d, d));
  p.whz = nn::constant(Matrix(d, d));
  p.bz = nn::constant(Matrix(1, d, 60.0));  // z = sigmoid(60) = 1 exactly
  p.wxr = nn::constant(random_matrix(d, d, 150));
  p.whr = nn::constant(random_matrix(d, d, 151));
  p.br = nn::constant(Matrix(1, d));
  p.wxh = nn::constant(random_matrix(d, d, 152));
  p.whh = nn::constant(random_matrix(d, d, 153));
  p.bh = nn::constant(Matrix(1, d));
  Matrix h = random_matrix(2, d, 154);
  Matrix out =
      nn::gru_cell(nn::constant(random_matrix(2, d, 155)), nn::constant(h), p)
          ->value;
  CHECK(max_abs_diff(out, h) == 0.0);
}

TEST_CASE("graph_gru_cell with no edges and K=1 collapses to gru_cell") {
  int n = 5, dx = 3, dh = 4;
  nn::ParamSet params(160);
  nn::GruParams flat;
  flat.wxz = params.weight("wxz", dx, dh);
  flat.whz = params.weight("whz", dh, dh);
  flat.bz = params.weight("bz", 1, dh);
  flat.wxr = params.weight("wxr", dx, dh);
  flat.whr = params.weight("whr", dh, dh);
  flat.br = params.weight("br", 1, dh);
  flat.wxh = params.weight("wxh", dx, dh);
  flat.whh = params.weight("whh", dh, dh);
  flat.bh = params.weight("bh", 1, dh);

  nn::GraphGruParams g;
  g.wxz = {flat.wxz};
  g.whz = {flat.whz};
  g.wxr = {flat.wxr};
  g.whr = {flat.whr};
  g.wxh = {flat.wxh};
  g.whh = {flat.whh};
  g.bz = flat.bz;
  g.br = flat.br;
  g.bh = flat.bh;

  Matrix x = random_matrix(n, dx, 161);
  Matrix h = random_matrix(n, dh, 162);
  nn::GraphOps ops = nn::build_graph_ops({}, n);
  Matrix graph_out =
      nn::graph_gru_cell(nn::constant(x), nn::constant(h), ops, g)->value;
  Matrix flat_out = nn::gru_cell(nn::constant(x), nn::constant(h), flat)->value;
  CHECK(max_abs_diff(graph_out, flat_out) < 1e-12);
}

TEST_CASE("graph_gru_cell gradients match finite differences") {
  int n = 5, d = 3;
  auto edges = random_edges(n, 0.4, 170);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, d, 171);
  Matrix h = random_matrix(n, d, 172);
  auto build = [&ops, x, h](const std::vector<nn::Tensor>& p) {
    nn::GraphGruParams g;
    g.wxz = {p[0], p[1]};
    g.whz = {p[2], p[3]};
    g.wxr = {p[0], p[2]};  // weight sharing across gates is fine for FD
    g.whr = {p[1], p[3]};
    g.wxh = {p[3], p[0]};
    g.whh = {p[2], p[1]};
    g.bz = p[4];
    g.br = p[5];
    g.bh = p[6];
    return nn::mean(
        nn::graph_gru_cell(nn::constant(x), nn::constant(h), ops, g));
  };
  std::vector<nn::Tensor> params{
      nn::parameter(random_matrix(d, d, 173)),
      nn::parameter(random_matrix(d, d, 174)),
      nn::parameter(random_matrix(d, d, 175)),
      nn::parameter(random_matrix(d, d, 176)),
      nn::parameter(random_matrix(1, d, 177)),
      nn::parameter(random_matrix(1, d, 178)),
      nn::parameter(random_matrix(1, d, 179))};
  CHECK(max_grad_error(build, params) < kGradTol);
}

TEST_CASE("adam leaves parameters unchanged under zero gradient") {
  nn::ParamSet params(180);
  nn::Tensor w = params.weight("w", 4, 4);
  Matrix before = w->value;
  nn::Adam opt;
  opt.register_params(params);
  opt.zero_grad();
  opt.step();
  CHECK(w->value == before);
}

TEST_CASE("adam first step matches the closed form") {
  nn::ParamSet params(190);
  nn::Tensor w = params.weight("w", 3, 5);
  Matrix before = w->value;
  Matrix g = random_matrix(3, 5, 191);
  w->grad = g;
  double lr = 0.02, eps = 1e-8;
  nn::Adam opt(lr, 0.9, 0.999, eps);
  opt.register_param(w);
  opt.step();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double expected =
        before.data()[i] - lr * g.data()[i] / (std::abs(g.data()[i]) + eps);
    CHECK(w->value.data()[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam training is deterministic for a fixed seed") {
  auto run = [] {
    nn::ParamSet params(200);
    nn::Tensor w = params.weight("w", 4, 3);
    Matrix x = random_matrix(6, 4, 201);
    Matrix y = random_matrix(6, 3, 202);
    nn::Adam opt(0.01);
    opt.register_params(params);
    for (int step = 0; step < 25; ++step) {
      opt.zero_grad();
      nn::backward(nn::mse(nn::matmul(nn::constant(x), w), y));
      opt.step();
    }
    return w->value;
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects double registration") {
  nn::ParamSet params(210);
  nn::Tensor w = params.weight("w", 2, 2);
  nn::Adam opt;
  opt.register_param(w);
  CHECK_THROWS_AS(opt.register_param(w), Error);
}

TEST_CASE("cheb K=2 recovers a planted spectral target to mse < 1e-6") {
  // Y = Lhat X W* is inside the K=2 hypothesis class (W_0 = 0, W_1 = W*),
  // so optimization must drive the training loss to numerical zero.
  int n = 20, din = 4, dout = 3;
  auto edges = random_edges(n, 0.3, 220);
  nn::GraphOps ops = nn::build_graph_ops(edges, n);
  Matrix x = random_matrix(n, din, 221);
  Matrix wstar = random_matrix(din, dout, 222);

  Matrix lx = naive_mm(dense_ops(edges, n).lhat, x);
  Matrix target = naive_mm(lx, wstar);

  nn::ParamSet params(223);
  nn::Tensor w0 = params.weight("w0", din, dout);
  nn::Tensor w1 = params.weight("w1", din, dout);
  nn::Adam opt(0.02);
  opt.register_params(params);
  double loss = 1.0;
  for (int step = 0; step < 2000 && loss >= 1e-6; ++step) {
    opt.zero_grad();
    nn::Tensor l =
        nn::mse(nn::cheb_conv(nn::constant(x), ops, {w0, w1}), target);
    nn::backward(l);
    opt.step();
    loss = l->value(0, 0);
  }
  CHECK(loss < 1e-6);
}

}  // TEST_SUITE
