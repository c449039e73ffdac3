#pragma once

#include <array>
#include <cstdint>

#include "semenet/explain/gradcam.hpp"
#include "semenet/image/image.hpp"

namespace semenet {

/// Jet-style colour table: blue, cyan, green, yellow, red at 0, 1/4, 1/2,
/// 3/4 and 1, linearly interpolated in between.
inline constexpr std::array<std::array<std::uint8_t, 3>, 5> kJetAnchors{{
    {0, 0, 255},
    {0, 255, 255},
    {0, 255, 0},
    {255, 255, 0},
    {255, 0, 0},
}};

/// Colour for v in [0,1] (clamped), each channel rounded half up.
std::array<std::uint8_t, 3> jet(double v);

/// (1-alpha)·gray + alpha·jet(hm), per channel, rounded half up. The
/// heatmap must match the image size; alpha must lie in [0,1].
RgbImage overlay(const GrayImage& img, const Heatmap& hm, double alpha);

/// 0..1 mapped to 0..255, rounded half up.
GrayImage heatmap_to_gray(const Heatmap& hm);

}  // namespace semenet
