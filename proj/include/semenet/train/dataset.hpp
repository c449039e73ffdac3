#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semenet/image/enhance.hpp"
#include "semenet/image/image.hpp"

namespace semenet {

/// In-memory split. Classification sets fill `labels`; segmentation sets
/// fill `masks`. `split` names the partition ("train", "val", "test").
struct Dataset {
  std::string split;
  std::vector<GrayImage> images;
  std::vector<int> labels;
  std::vector<MaskImage> masks;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return images.size(); }
  bool has_masks() const noexcept { return !masks.empty(); }
  /// Checks parallel lengths and label range.
  void validate() const;
  /// Subset by indices, preserving the split name.
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

enum class ClaheMode {
  per_epoch,  ///< a fresh random fraction of the samples each epoch
  offline,    ///< one fixed random fraction, enhanced before training
};

struct AugmentConfig {
  double rotation_deg = 0.0;  // uniform in [-deg, +deg]
  double clahe_fraction = 0.0;
  ClaheMode clahe_mode = ClaheMode::per_epoch;
  ClaheOptions clahe;
};

/// Deterministic augmentation of sample `index` in `epoch`: CLAHE with
/// probability clahe_fraction (per-epoch mode), then rotation. Masks
/// receive the same rotation.
void augment_sample(GrayImage& img, MaskImage* mask, const AugmentConfig& cfg, std::uint64_t seed,
                    std::uint64_t epoch, std::uint64_t index);

/// Offline CLAHE pass: enhances round(fraction * n) samples chosen under
/// `seed`. Returns the chosen indices.
std::vector<std::size_t> apply_offline_clahe(Dataset& data, const AugmentConfig& cfg, std::uint64_t seed);

}  // namespace semenet
