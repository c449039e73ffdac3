#pragma once

#include <span>

#include "semenet/image/image.hpp"
#include "semenet/nn/model.hpp"

namespace semenet {

/// Stacks gray images into a [N,1,H,W] tensor scaled to [0,1].
template <typename T>
Tensor<T> images_to_tensor(std::span<const GrayImage* const> images);
template <typename T>
Tensor<T> image_to_tensor(const GrayImage& img);

struct MaskCleanup {
  bool enabled = true;
  std::size_t keep_components = 2;  // largest 4-connected foreground regions
  bool fill_holes = true;
};

/// Keeps the largest foreground components and fills enclosed background.
MaskImage clean_mask(const MaskImage& mask, const MaskCleanup& opt = {});

/// sigmoid(logit) >= threshold per pixel, then cleanup. Requires a
/// one-channel segmentation model.
MaskImage unet_predict_mask(Model<float>& model, const GrayImage& img, double threshold = 0.5,
                            const MaskCleanup& cleanup = {});

}  // namespace semenet
