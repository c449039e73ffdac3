#pragma once

#include <array>
#include <cstdint>

#include "semenet/image/image.hpp"

namespace semenet {

using GrayLut = std::array<std::uint8_t, GrayImage::kLevels>;

/// Level k maps to round_half_up(255 * CDF(k)).
GrayLut equalization_lut(const Histogram& h);

/// Global histogram equalisation.
GrayImage equalize_he(const GrayImage& img);

struct ClaheOptions {
  std::size_t tiles_x = 8;
  std::size_t tiles_y = 8;
  /// Multiple of the uniform bin height (tile pixels / 256), >= 1.
  double clip_limit = 4.0;
};

/// Integer clip height used for a tile of `tile_pixels` samples.
std::uint64_t clahe_clip_height(double clip_limit, std::uint64_t tile_pixels);

/// Clips bins at `clip` and redistributes the excess: an equal share to
/// every bin, then one extra count per bin from level 0 upward for the
/// remainder. The total is preserved.
Histogram clip_histogram(const Histogram& h, std::uint64_t clip);

/// Contrast-limited adaptive equalisation: per-tile clipped equalisation
/// with bilinear interpolation between the four nearest tile centres
/// (edge tiles replicated).
GrayImage clahe(const GrayImage& img, const ClaheOptions& opt = {});

}  // namespace semenet
