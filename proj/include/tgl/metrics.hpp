#pragma once

#include <vector>

namespace tgl::metrics {

// Average precision over a ranked list, ties handled pessimistically: when
// scores are equal, negatives are ranked ahead of positives, so the value
// never flatters a model. Labels are 0/1; throws DegenerateLabels unless
// both classes are present.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

// 1-based ranks; tied values share the average of their rank range.
std::vector<double> average_ranks(const std::vector<double>& values);

// pcc/spearman are NaN when either side is constant (undefined-as-missing).
struct RegressionMetrics {
  double pcc = 0.0;
  double mae = 0.0;
  double spearman = 0.0;
};

RegressionMetrics regression_metrics(const std::vector<double>& pred,
                                     const std::vector<double>& target);

enum class Direction {
  up,    // largest values first (most upregulated)
  down,  // smallest values first (most downregulated)
  top,   // synonym of up, used for centrality ranking
};

// |top-k'(pred) ∩ top-k'(target)| / k' with k' = min(k, n); ties broken by
// ascending index (gene id).
double precision_at_k(const std::vector<double>& pred,
                      const std::vector<double>& target, int k, Direction dir);

}  // namespace tgl::metrics
