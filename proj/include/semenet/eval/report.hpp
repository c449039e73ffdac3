#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semenet/eval/metrics.hpp"
#include "semenet/eval/roc.hpp"

namespace semenet {

struct MetricsReport {
  double accuracy = 0.0;
  F1Scores f1;
  /// Absent when some class is missing from the truths (AUC undefined).
  std::optional<OvrAuc> auc;
  std::string auc_note;
  ConfusionMatrix confusion;
};

/// Argmax predictions plus one-vs-rest ROC over probabilities[N,K].
MetricsReport evaluate(const Tensor<double>& probabilities, std::span<const int> truths,
                       std::vector<std::string> class_names = {});

nlohmann::json to_json(const MetricsReport& report);

/// "truth\\pred,<names...>" header, then one row per true class.
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);
/// "class,threshold,fpr,tpr" with one line per curve point.
void write_roc_csv(const std::filesystem::path& path, const OvrAuc& auc, const std::vector<std::string>& names);

}  // namespace semenet
