#pragma once

#include <cstdint>
#include <vector>

#include "semenet/image/image.hpp"

namespace semenet {

/// Counter-clockwise rotation (as displayed, y pointing down) about the
/// pixel-grid centre with bilinear sampling. Samples mapping outside the
/// source frame take `fill`.
GrayImage rotate(const GrayImage& img, double degrees, std::uint8_t fill = 0);

/// Bilinear resampling with half-pixel-centre coordinates, clamped at the
/// borders.
GrayImage resize_bilinear(const GrayImage& img, std::size_t new_w, std::size_t new_h);

/// Same mapping as resize_bilinear over an arbitrary-precision sample
/// plane, without rounding the result.
std::vector<double> resize_plane(const std::vector<double>& samples, std::size_t w, std::size_t h,
                                 std::size_t new_w, std::size_t new_h);

}  // namespace semenet
