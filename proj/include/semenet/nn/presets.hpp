#pragma once

#include <string>
#include <vector>

#include "semenet/nn/model_config.hpp"

namespace semenet {

/// Knobs of the toy classification backbones.
struct BackboneOptions {
  std::size_t input = 64;     // square input side
  std::size_t channels = 1;
  std::size_t classes = 3;
  std::size_t width = 8;      // stem channels; stages use 2x, 4x, 8x
  bool se = true;
  std::size_t se_reduction = 4;
  bool moex = true;           // moex layer after the stem
  bool gap_head = true;       // false: dense head on the flattened map
};

/// Stem conv + three stride-2 residual stages (+SE) + GAP + dense.
ModelConfig mini_resnet(const BackboneOptions& opt, const std::string& name = "mini-seme");
/// Stem conv + three dense blocks with SE after each transition.
ModelConfig mini_densenet(const BackboneOptions& opt, const std::string& name = "mini-dense");
/// Two-level encoder/decoder with skip concatenations and a 1x1 mask head.
ModelConfig unet_toy(std::size_t input = 64, std::size_t width = 8);

/// "mini-seme", "mini-res", "mini-dense" or "unet-toy".
ModelConfig preset_config(const std::string& name, std::size_t input = 64, std::size_t classes = 3);
const std::vector<std::string>& preset_names();

}  // namespace semenet
