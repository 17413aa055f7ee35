#include "tgl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tgl/errors.hpp"
#include "tgl/rng.hpp"

using namespace tgl;
using metrics::Direction;

namespace {

std::vector<double> random_vector(tgl::rng::Rng& rng, int n, bool quantized) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.uniform(-2.0, 2.0);
    // Quantizing forces frequent ties so the tie rules are actually hit.
    if (quantized) x = std::round(x * 4.0) / 4.0;
  }
  return v;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auprc: perfect ranking scores 1") {
  CHECK(metrics::auprc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
}

TEST_CASE("auprc: hand fixture (1 + 2/3)/2") {
  double v = metrics::auprc({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0});
  CHECK(v == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("auprc: all-tied scores match the closed form") {
  // With every score equal the pessimistic rule ranks all n-p negatives
  // first, so AP = (sum_{k=1..p} k/(n-p+k)) / p.
  for (int n : {4, 9, 17}) {
    for (int p : {1, 2, n / 2, n - 1}) {
      std::vector<double> scores(n, 0.5);
      std::vector<int> labels(n, 0);
      // Positions are irrelevant under a full tie; any placement works.
      for (int i = 0; i < p; ++i) labels[i] = 1;
      double expect = 0.0;
      for (int k = 1; k <= p; ++k) expect += static_cast<double>(k) / (n - p + k);
      expect /= p;
      CHECK(metrics::auprc(scores, labels) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("auprc: invariant under strictly monotone transforms") {
  tgl::rng::Rng rng(4101);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + static_cast<int>(rng.below(30));
    std::vector<double> scores = random_vector(rng, n, trial % 2 == 0);
    std::vector<int> labels(n, 0);
    labels[rng.below(static_cast<std::uint64_t>(n))] = 1;
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < 0.4) labels[i] = 1;
    bool has_neg = std::any_of(labels.begin(), labels.end(), [](int y) { return y == 0; });
    if (!has_neg) labels[0] = 0;

    std::vector<double> warped(scores);
    for (double& s : warped) s = std::exp(0.7 * s) + 3.0;
    CHECK(metrics::auprc(scores, labels) ==
          doctest::Approx(metrics::auprc(warped, labels)).epsilon(1e-12));
  }
}

TEST_CASE("auprc: degenerate and malformed inputs") {
  CHECK_THROWS_AS(metrics::auprc({0.5, 0.4}, {1, 1}), Error);
  CHECK_THROWS_AS(metrics::auprc({0.5, 0.4}, {0, 0}), Error);
  CHECK_THROWS_AS(metrics::auprc({}, {}), Error);
  CHECK_THROWS_AS(metrics::auprc({0.5}, {1, 0}), Error);
  CHECK_THROWS_AS(metrics::auprc({0.5, 0.1}, {2, 0}), Error);
  try {
    metrics::auprc({0.5, 0.4}, {1, 1});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_labels);
  }
}

TEST_CASE("average_ranks: ties share the average rank") {
  std::vector<double> r = metrics::average_ranks({10.0, 20.0, 20.0, 5.0});
  CHECK(r == std::vector<double>{2.0, 3.5, 3.5, 1.0});
  CHECK(metrics::average_ranks({7.0, 7.0, 7.0}) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("regression_metrics: identity and negation fixtures") {
  std::vector<double> t = {1.0, 2.0, 4.0, 8.0};
  auto id = metrics::regression_metrics(t, t);
  CHECK(id.pcc == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(id.mae == 0.0);
  CHECK(id.spearman == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> neg = {-1.0, -2.0, -4.0, -8.0};
  auto m = metrics::regression_metrics(neg, t);
  CHECK(m.pcc == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(m.spearman == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("regression_metrics: tie-averaged spearman matches the rank oracle") {
  std::vector<double> pred = {1.0, 2.0, 2.0, 3.0};
  std::vector<double> target = {1.0, 2.0, 3.0, 4.0};
  auto m = metrics::regression_metrics(pred, target);
  double want = oracle::spearman(pred, target);
  CHECK(m.spearman == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("regression_metrics: constant side is undefined-as-missing") {
  std::vector<double> c = {3.0, 3.0, 3.0};
  std::vector<double> v = {1.0, 2.0, 3.0};
  auto m = metrics::regression_metrics(c, v);
  CHECK(std::isnan(m.pcc));
  CHECK(std::isnan(m.spearman));
  CHECK(m.mae == doctest::Approx(1.0));
  auto m2 = metrics::regression_metrics(v, c);
  CHECK(std::isnan(m2.pcc));
}

TEST_CASE("regression_metrics: length checks") {
  CHECK_THROWS_AS(metrics::regression_metrics({1.0, 2.0}, {1.0}), Error);
  CHECK_THROWS_AS(metrics::regression_metrics({1.0}, {1.0}), Error);
}

TEST_CASE("precision_at_k: identity, reverse, clamping") {
  std::vector<double> v = {5.0, 1.0, 3.0, 2.0, 4.0, 0.0};
  CHECK(metrics::precision_at_k(v, v, 3, Direction::up) == 1.0);
  CHECK(metrics::precision_at_k(v, v, 3, Direction::down) == 1.0);
  CHECK(metrics::precision_at_k(v, v, 3, Direction::top) == 1.0);

  // Reverse ranking with distinct values and k' = n/2: disjoint halves.
  std::vector<double> fwd = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> rev = {6.0, 5.0, 4.0, 3.0, 2.0, 1.0};
  CHECK(metrics::precision_at_k(rev, fwd, 3, Direction::up) == 0.0);

  // k larger than n clamps to n, which makes the overlap total.
  std::vector<double> a = {2.0, 1.0, 3.0};
  std::vector<double> b = {30.0, 10.0, 20.0};
  CHECK(metrics::precision_at_k(a, b, 200, Direction::up) == 1.0);
}

TEST_CASE("precision_at_k: ascending-id tie break is observable") {
  // pred is constant, so its top-2 under the tie rule is {0, 1}.
  std::vector<double> pred = {1.0, 1.0, 1.0, 1.0};
  std::vector<double> t1 = {9.0, 8.0, 1.0, 0.0};  // target top-2 {0,1}
  std::vector<double> t2 = {0.0, 1.0, 8.0, 9.0};  // target top-2 {2,3}
  CHECK(metrics::precision_at_k(pred, t1, 2, Direction::up) == 1.0);
  CHECK(metrics::precision_at_k(pred, t2, 2, Direction::up) == 0.0);
}

TEST_CASE("precision_at_k: errors") {
  CHECK_THROWS_AS(metrics::precision_at_k({}, {}, 3, Direction::up), Error);
  CHECK_THROWS_AS(metrics::precision_at_k({1.0}, {1.0}, 0, Direction::up), Error);
  CHECK_THROWS_AS(metrics::precision_at_k({1.0, 2.0}, {1.0}, 1, Direction::up), Error);
}

TEST_CASE("oracle battle: 1000 random instances agree with brute force") {
  tgl::rng::Rng rng(90210);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(rng.below(63));
    bool quantized = trial % 3 != 0;
    std::vector<double> pred = random_vector(rng, n, quantized);
    std::vector<double> target = random_vector(rng, n, quantized);

    // auprc needs binary labels with both classes present.
    std::vector<int> labels(n);
    int pos = 0;
    for (int& y : labels) {
      y = rng.uniform() < 0.35 ? 1 : 0;
      pos += y;
    }
    if (pos == 0) labels[0] = 1;
    if (pos == n) labels[0] = 0;
    worst = std::max(worst, std::abs(metrics::auprc(pred, labels) -
                                     oracle::average_precision(pred, labels)));

    auto m = metrics::regression_metrics(pred, target);
    double opcc = oracle::pearson(pred, target);
    double osp = oracle::spearman(pred, target);
    if (std::isnan(opcc)) {
      CHECK(std::isnan(m.pcc));
    } else {
      worst = std::max(worst, std::abs(m.pcc - opcc));
    }
    if (std::isnan(osp)) {
      CHECK(std::isnan(m.spearman));
    } else {
      worst = std::max(worst, std::abs(m.spearman - osp));
    }
    worst = std::max(worst, std::abs(m.mae - oracle::mae(pred, target)));

    int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n + 10)));
    worst = std::max(worst,
                     std::abs(metrics::precision_at_k(pred, target, k, Direction::up) -
                              oracle::precision_at_k(pred, target, k, +1)));
    worst = std::max(worst,
                     std::abs(metrics::precision_at_k(pred, target, k, Direction::down) -
                              oracle::precision_at_k(pred, target, k, -1)));

    auto ranks = metrics::average_ranks(pred);
    auto oranks = oracle::average_ranks(pred);
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(ranks[i] - oranks[i]));
  }
  CHECK(worst < 1e-9);
}

}  // TEST_SUITE
