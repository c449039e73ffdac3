#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semenet/image/image.hpp"
#include "semenet/nn/model.hpp"

namespace semenet {

struct CascadeConfig {
  std::filesystem::path stage1;
  std::filesystem::path stage2;
  std::optional<std::filesystem::path> mask;  // U-Net applied before stage 2
  std::string viral_label = "viral";
  double mask_threshold = 0.5;

  static CascadeConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct CascadeResult {
  std::string label;
  std::vector<double> stage1;
  std::optional<std::vector<double>> stage2;  // only when stage 1 says viral
  /// Leaf probabilities: stage-1 non-viral classes as-is, viral leaves as
  /// stage1[viral] · stage2[leaf]. Absent stage 2 leaves the viral mass on
  /// the stage-1 label.
  std::vector<std::pair<std::string, double>> leaves;
};

struct CascadeLogEntry {
  std::string id;
  std::string stage1_argmax;
  bool stage2_invoked = false;
  nlohmann::json to_json() const;
};

/// Two-stage classifier: infection type, then viral subtype.
class Cascade {
 public:
  Cascade(Model<float> stage1, std::vector<std::string> names1, Model<float> stage2, std::vector<std::string> names2,
          std::optional<Model<float>> mask = std::nullopt, std::string viral_label = "viral",
          double mask_threshold = 0.5);

  /// Class tables come from each checkpoint's info.class_names.
  static Cascade load(const CascadeConfig& cfg);

  CascadeResult predict(const GrayImage& img, const std::string& id = {});

  const std::vector<std::string>& stage1_names() const noexcept { return names1_; }
  const std::vector<std::string>& stage2_names() const noexcept { return names2_; }
  /// Final labels in leaf order.
  std::vector<std::string> leaf_names() const;
  const std::vector<CascadeLogEntry>& log() const noexcept { return log_; }

 private:
  Model<float> stage1_;
  Model<float> stage2_;
  std::optional<Model<float>> mask_;
  std::vector<std::string> names1_;
  std::vector<std::string> names2_;
  std::size_t viral_;
  double threshold_;
  std::vector<CascadeLogEntry> log_;
};

}  // namespace semenet
