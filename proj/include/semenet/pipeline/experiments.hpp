#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semenet/nn/model.hpp"
#include "semenet/nn/segment.hpp"
#include "semenet/pipeline/cascade.hpp"
#include "semenet/pipeline/synthetic.hpp"
#include "semenet/train/trainer.hpp"

namespace semenet {

struct SplitSets {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Groups generated samples by split.
SplitSets to_datasets(const std::vector<SyntheticSample>& samples, const std::vector<std::string>& class_names,
                      bool with_masks = false);

/// apply_mask(img, unet_predict_mask(img)) for every image.
std::vector<GrayImage> mask_images(Model<float>& unet, const std::vector<GrayImage>& images, double threshold = 0.5);

/// Bilinear resize of every image (and mask, re-thresholded at 128).
Dataset resized(const Dataset& data, std::size_t side);

double accuracy_of(Model<float>& model, const Dataset& data);

/// Toy backbone ablation mirroring the structure of the paper's table:
/// base (flatten head) → GAP head at twice the input side → +SE →
/// +SE+MoEx+CLAHE.
struct AblationConfig {
  SyntheticSpec data;
  TrainConfig train;
  std::size_t width = 8;
  double clahe_fraction = 0.4;

  static AblationConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct AblationRow {
  std::string variant;
  std::size_t input = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  std::optional<double> macro_auc;
  double seconds = 0;
  nlohmann::json to_json() const;
};

std::vector<AblationRow> run_ablation(const AblationConfig& cfg,
                                      const std::function<void(const AblationRow&)>& progress = {});

/// Shortcut-learning audit: a class glyph in a corner versus a weaker
/// lung-field pattern, trained with and without U-Net masking.
struct ConfoundConfig {
  SyntheticSpec data;  // must carry a token
  TrainConfig train;
  std::size_t width = 8;
  std::string cam_layer = "block1";
  double mask_threshold = 0.5;
};

struct ConfoundArm {
  double train_acc = 0;
  double test_acc = 0;
  double swapped_acc = 0;  // test images carrying the next class's glyph
  double token_mass = 0;   // mean Grad-CAM mass inside the token, true class
  nlohmann::json to_json() const;
};

struct ConfoundResult {
  ConfoundArm unmasked;
  ConfoundArm masked;
};

ConfoundResult run_confound(const ConfoundConfig& cfg, Model<float>& unet);

struct UnetRun {
  Model<float> model;
  TrainState state;
  double test_iou = 0;  // mean IoU of cleaned predictions on the test split
};

/// Trains unet_toy on the spec's train split (validating on validation).
UnetRun train_unet(const SyntheticSpec& data, const TrainConfig& train, std::size_t width = 8);

/// Toy two-stage cascade: stage 1 on {normal, bacterial, viral}, stage 2
/// on the union of raw and U-Net-masked {covid-like, other-viral} images,
/// scored on a mixed four-leaf test set.
struct CascadeExperimentConfig {
  std::size_t size = 64;
  std::size_t train_per_class = 200;
  std::size_t val_per_class = 40;
  std::size_t test_per_leaf = 25;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::size_t width = 8;
};

struct CascadeExperimentResult {
  double accuracy = 0;
  std::size_t images = 0;
  std::size_t stage2_calls = 0;
  bool routing_respected = true;  // no stage-2 call after a non-viral argmax
  double max_leaf_sum_error = 0;
  std::vector<CascadeLogEntry> log;
};

CascadeExperimentResult run_cascade_experiment(const CascadeExperimentConfig& cfg,
                                               const std::optional<Model<float>>& unet);

}  // namespace semenet
