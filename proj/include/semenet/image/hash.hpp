#pragma once

#include <cstdint>
#include <vector>

#include "semenet/image/image.hpp"

namespace semenet {

using HashBits = std::vector<std::uint8_t>;  // one {0,1} entry per cell

/// Perceptual average hash: bilinear reduction to side x side (unrounded),
/// then one bit per cell set iff the cell is strictly above the mean.
HashBits average_hash(const GrayImage& img, std::size_t side = 8);

/// Same over a 16-bit sample plane.
HashBits average_hash(const std::vector<std::uint16_t>& samples, std::size_t w, std::size_t h,
                      std::size_t side = 8);

std::size_t hamming_distance(const HashBits& a, const HashBits& b);

}  // namespace semenet
