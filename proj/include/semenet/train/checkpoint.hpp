#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "semenet/nn/model.hpp"
#include "semenet/train/trainer.hpp"

namespace semenet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   "SEMN" | u32 version | u64 n | n bytes of JSON metadata
///   | u32 blob count | blobs | u64 FNV-1a digest of everything before it
/// A blob is u32 name length | name | u32 rank | u64 dims[rank] | f32 data.
/// Parameters are stored as "param/<name>", optimizer buffers as
/// "opt.first/<name>" and "opt.second/<name>".
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const TrainState* state = nullptr, const nlohmann::json& train_config = nullptr,
                     const nlohmann::json& info = nullptr);

struct LoadedCheckpoint {
  Model<float> model;
  std::optional<TrainState> state;
  nlohmann::json train_config;
  /// Free-form run information (class names, data source).
  nlohmann::json info;
};

/// Throws CheckpointError naming the cause (bad magic, version mismatch,
/// digest mismatch from truncation or corruption, malformed content).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

}  // namespace semenet
