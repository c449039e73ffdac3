#include "semenet/eval/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semenet/error.hpp"

namespace semenet {

namespace {

struct Counts {
  std::uint64_t pos = 0, neg = 0;
};

Counts count_classes(std::span<const double> scores, std::span<const int> truths, int positive) {
  if (scores.size() != truths.size()) throw InvalidInputError("score and truth counts differ");
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw InvalidInputError("NaN score at sample " + std::to_string(i));
    (truths[i] == positive ? c.pos : c.neg) += 1;
  }
  if (c.pos == 0 || c.neg == 0) {
    throw UndefinedMetricError("ROC needs both positive and negative samples (class " + std::to_string(positive) + ")");
  }
  return c;
}

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths, int positive_class) {
  const Counts c = count_classes(scores, truths, positive_class);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.positive_class = positive_class;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0, area2 = 0;  // area2 = 2 * area * pos * neg
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    const std::uint64_t tp0 = tp, fp0 = fp;
    for (; i < order.size() && scores[order[i]] == s; ++i) (truths[order[i]] == positive_class ? tp : fp) += 1;
    area2 += (fp - fp0) * (tp + tp0);
    curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(c.neg),
                            static_cast<double>(tp) / static_cast<double>(c.pos)});
  }
  curve.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
  return curve;
}

double auc_pair_count(std::span<const double> scores, std::span<const int> truths, int positive_class) {
  const Counts c = count_classes(scores, truths, positive_class);
  std::uint64_t twice = 0;  // 2 * wins + ties
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truths[i] != positive_class) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truths[j] == positive_class) continue;
      twice += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

OvrAuc macro_ovr_auc(const Tensor<double>& probabilities, std::span<const int> truths) {
  if (probabilities.rank() != 2 || probabilities.dim(0) != truths.size()) {
    throw InvalidInputError("probabilities must be [N,K] with one row per truth label");
  }
  const std::size_t n = probabilities.dim(0), k = probabilities.dim(1);
  if (k < 2) throw InvalidInputError("one-vs-rest AUC needs K >= 2");
  for (std::size_t cls = 0; cls < k; ++cls) {
    if (std::find(truths.begin(), truths.end(), static_cast<int>(cls)) == truths.end()) {
      throw UndefinedMetricError("class " + std::to_string(cls) + " does not occur in the truth labels");
    }
  }
  OvrAuc out;
  std::vector<double> column(n);
  for (std::size_t cls = 0; cls < k; ++cls) {
    for (std::size_t i = 0; i < n; ++i) column[i] = probabilities[i * k + cls];
    out.curves.push_back(roc_auc(column, truths, static_cast<int>(cls)));
    out.per_class.push_back(out.curves.back().auc);
  }
  out.macro = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) / static_cast<double>(k);
  return out;
}

}  // namespace semenet
