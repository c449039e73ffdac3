#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semenet/image/image.hpp"

namespace semenet {

/// Row = true class, column = predicted class.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;  // row-major K x K
  std::vector<std::string> names;

  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
  std::uint64_t total() const;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t classes,
                          std::vector<std::string> names = {});

double accuracy(const ConfusionMatrix& cm);

struct F1Scores {
  std::vector<double> per_class;
  /// Classes absent from both predictions and truths are left out.
  std::vector<bool> counted;
  double macro = 0.0;
};

F1Scores f1_scores(const ConfusionMatrix& cm);

/// Mean over {foreground, background} of |intersection| / |union|; a
/// class with an empty union scores 1.
double mean_iou(const MaskImage& pred, const MaskImage& truth);

}  // namespace semenet
