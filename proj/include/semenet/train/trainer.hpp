#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semenet/nn/model.hpp"
#include "semenet/train/dataset.hpp"
#include "semenet/train/optim.hpp"
#include "semenet/train/schedule.hpp"

namespace semenet {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  SchedulerConfig schedule;  // eta_max of a constant schedule is ignored in favour of optimizer.lr
  AugmentConfig augment;
  /// Use the model's moex layer (if any). Off means the layer is identity.
  bool moex = true;

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;  // rate at the epoch's first step
  double train_loss = 0.0;
  double val_acc = 0.0;  // pixel accuracy for segmentation
  std::optional<double> val_iou;
  double wall_ms = 0.0;  // timing only; excluded from determinism checks

  /// One JSON-lines record.
  nlohmann::json to_json() const;
  static EpochRecord from_json(const nlohmann::json& doc);
  /// Equal in every field except wall_ms.
  bool same_result(const EpochRecord& other) const;
};

/// Everything needed to continue a run exactly.
struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  OptimizerState<float> optimizer;
  std::vector<EpochRecord> history;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
};

struct FitHooks {
  /// Called after each epoch with the model and updated state.
  std::function<void(const Model<float>&, const TrainState&)> on_epoch;
  /// Called when validation improves (the best-checkpoint moment).
  std::function<void(const Model<float>&, const TrainState&)> on_best;
};

/// Trains `model` on `train`, validating on `val`, until cfg.epochs
/// epochs are complete (resuming from `state` when given). Neither set may
/// be a "test" split. Classification models use softmax cross-entropy
/// (MoEx-mixed when enabled); segmentation models use sigmoid BCE.
TrainState fit(Model<float>& model, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
               std::optional<TrainState> state = std::nullopt, const FitHooks& hooks = {});

/// Eval-mode softmax probabilities [N,K] in batches.
Tensor<double> predict_probabilities(Model<float>& model, const std::vector<GrayImage>& images,
                                     std::size_t batch_size = 32);
std::vector<int> predict_labels(Model<float>& model, const std::vector<GrayImage>& images, std::size_t batch_size = 32);

/// Parameter values in model order (for snapshots of the best epoch).
std::vector<Tensor<float>> snapshot(const Model<float>& model);
void restore(Model<float>& model, const std::vector<Tensor<float>>& values);

/// JSON lines, one EpochRecord per line, without wall_ms.
void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace semenet
