#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semenet/tensor/tensor.hpp"

namespace semenet {

struct RocPoint {
  double threshold;  // scores >= threshold are called positive
  double fpr;
  double tpr;
};

struct RocCurve {
  int positive_class = 1;
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// Threshold sweep over the distinct scores. The trapezoid area is
/// accumulated in integers, so it equals the pair-counting statistic
/// exactly. Throws UndefinedMetricError unless both classes occur.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths, int positive_class = 1);

/// P(score+ > score-) + P(tie)/2 by exhaustive pair counting.
double auc_pair_count(std::span<const double> scores, std::span<const int> truths, int positive_class = 1);

struct OvrAuc {
  std::vector<RocCurve> curves;  // one per class
  std::vector<double> per_class;
  double macro = 0.0;
};

/// One-vs-rest AUC per class over probabilities[N,K]; the macro value is
/// the unweighted mean. Every class must occur in truths.
OvrAuc macro_ovr_auc(const Tensor<double>& probabilities, std::span<const int> truths);

}  // namespace semenet
