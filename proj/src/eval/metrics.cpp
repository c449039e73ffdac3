#include "semenet/eval/metrics.hpp"

#include <numeric>

#include "semenet/error.hpp"

namespace semenet {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t classes,
                          std::vector<std::string> names) {
  if (preds.size() != truths.size()) throw InvalidInputError("prediction and truth counts differ");
  if (classes == 0) throw InvalidInputError("confusion matrix needs at least one class");
  if (!names.empty() && names.size() != classes) throw InvalidInputError("class name count differs from K");
  ConfusionMatrix cm{classes, std::vector<std::uint64_t>(classes * classes, 0), std::move(names)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = truths[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= classes || static_cast<std::size_t>(t) >= classes) {
      throw InvalidInputError("label out of range at sample " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw UndefinedMetricError("accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t k = 0; k < cm.classes; ++k) trace += cm.at(k, k);
  return static_cast<double>(trace) / static_cast<double>(total);
}

F1Scores f1_scores(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetricError("F1 of an empty confusion matrix");
  F1Scores out;
  std::size_t counted = 0;
  double sum = 0;
  for (std::size_t k = 0; k < cm.classes; ++k) {
    std::uint64_t tp = cm.at(k, k), fp = 0, fn = 0;
    for (std::size_t j = 0; j < cm.classes; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN).
    const std::uint64_t denom = 2 * tp + fp + fn;
    const bool present = denom > 0;
    const double f1 = present ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    out.per_class.push_back(f1);
    out.counted.push_back(present);
    if (present) {
      sum += f1;
      ++counted;
    }
  }
  out.macro = counted ? sum / static_cast<double>(counted) : 0.0;
  return out;
}

double mean_iou(const MaskImage& pred, const MaskImage& truth) {
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw InvalidInputError("mask dimensions differ");
  }
  std::uint64_t inter[2] = {0, 0}, uni[2] = {0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred.samples()[i] ? 1 : 0, t = truth.samples()[i] ? 1 : 0;
    for (int c = 0; c < 2; ++c) {
      const bool in_p = p == c, in_t = t == c;
      inter[c] += in_p && in_t;
      uni[c] += in_p || in_t;
    }
  }
  double sum = 0;
  for (int c = 0; c < 2; ++c) sum += uni[c] ? static_cast<double>(inter[c]) / static_cast<double>(uni[c]) : 1.0;
  return sum / 2;
}

}  // namespace semenet
