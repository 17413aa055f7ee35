#include "tgl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

#include "tgl/errors.hpp"

namespace tgl::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(Errc::length_mismatch, std::string(what) + ": " + std::to_string(a) +
                                    " vs " + std::to_string(b));
  }
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      fail(Errc::numerical_error, std::string(what) + " contains a non-finite value");
    }
  }
}

}  // namespace

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_lengths(scores.size(), labels.size(), "auprc scores/labels");
  if (scores.empty()) fail(Errc::empty_input, "auprc: empty input");
  check_finite(scores, "auprc scores");

  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) fail(Errc::invalid_label, "auprc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size()) {
    fail(Errc::degenerate_labels, "auprc: needs at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  // Score descending; within a tie negatives precede positives (pessimistic).
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    return labels[i] < labels[j];
  });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  check_finite(values, "average_ranks values");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (values[i] != values[j]) return values[i] < values[j];
    return i < j;
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the average of ranks i+1..j+1.
    const double avg = static_cast<double>(i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

RegressionMetrics regression_metrics(const std::vector<double>& pred,
                                     const std::vector<double>& target) {
  check_lengths(pred.size(), target.size(), "regression pred/target");
  if (pred.size() < 2) {
    fail(Errc::empty_input, "regression_metrics: needs at least two samples");
  }
  check_finite(pred, "regression pred");
  check_finite(target, "regression target");

  RegressionMetrics m;
  m.pcc = pearson(pred, target);
  double mae = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) mae += std::abs(pred[i] - target[i]);
  m.mae = mae / static_cast<double>(pred.size());
  m.spearman = pearson(average_ranks(pred), average_ranks(target));
  return m;
}

double precision_at_k(const std::vector<double>& pred,
                      const std::vector<double>& target, int k, Direction dir) {
  check_lengths(pred.size(), target.size(), "precision_at_k pred/target");
  if (pred.empty()) fail(Errc::empty_input, "precision_at_k: empty input");
  if (k <= 0) fail(Errc::config_error, "precision_at_k: k must be positive");
  check_finite(pred, "precision_at_k pred");
  check_finite(target, "precision_at_k target");

  const std::size_t n = pred.size();
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  const bool largest = dir != Direction::down;

  auto top_set = [&](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      if (v[i] != v[j]) return largest ? v[i] > v[j] : v[i] < v[j];
      return i < j;  // ascending gene id on ties
    });
    order.resize(kk);
    std::sort(order.begin(), order.end());
    return order;
  };

  const std::vector<std::size_t> p = top_set(pred);
  const std::vector<std::size_t> t = top_set(target);
  std::vector<std::size_t> both;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(kk);
}

}  // namespace tgl::metrics
