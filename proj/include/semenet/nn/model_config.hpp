#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace semenet {

enum class Task { classify, segment };

/// One entry of a model's layer list. `params` holds the kind-specific
/// keys (see README, "Model configs"); `inputs` names extra inputs such as
/// the skip connection of upsample_concat.
struct LayerSpec {
  std::string kind;
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> inputs;
};

struct ModelConfig {
  std::string name;
  Task task = Task::classify;
  std::array<std::size_t, 3> input{1, 64, 64};  // C, H, W
  std::size_t classes = 3;
  std::vector<LayerSpec> layers;

  static ModelConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  static ModelConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

const std::vector<std::string>& layer_kinds();

}  // namespace semenet
