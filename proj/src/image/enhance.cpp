#include "semenet/image/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "semenet/error.hpp"

namespace semenet {

GrayLut equalization_lut(const Histogram& h) {
  GrayLut lut{};
  if (h.total == 0) throw InvalidInputError("equalisation of an empty histogram");
  std::uint64_t cum = 0;
  for (int k = 0; k < GrayImage::kLevels; ++k) {
    cum += h.bins[k];
    // floor(255 * cum / total + 1/2) in exact integer arithmetic.
    lut[k] = static_cast<std::uint8_t>((2 * 255 * cum + h.total) / (2 * h.total));
  }
  return lut;
}

GrayImage equalize_he(const GrayImage& img) {
  if (img.empty()) throw InvalidInputError("equalize_he on an empty image");
  const GrayLut lut = equalization_lut(histogram(img));
  GrayImage out = img;
  for (auto& s : out.samples()) s = lut[s];
  return out;
}

std::uint64_t clahe_clip_height(double clip_limit, std::uint64_t tile_pixels) {
  const double raw = std::floor(clip_limit * static_cast<double>(tile_pixels) / GrayImage::kLevels);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(raw));
}

Histogram clip_histogram(const Histogram& h, std::uint64_t clip) {
  Histogram out = h;
  std::uint64_t excess = 0;
  for (auto& b : out.bins) {
    if (b > clip) {
      excess += b - clip;
      b = clip;
    }
  }
  const std::uint64_t share = excess / GrayImage::kLevels;
  const std::uint64_t rest = excess % GrayImage::kLevels;
  for (std::size_t k = 0; k < out.bins.size(); ++k) out.bins[k] += share + (k < rest ? 1 : 0);
  return out;
}

GrayImage clahe(const GrayImage& img, const ClaheOptions& opt) {
  const std::size_t w = img.width(), h = img.height();
  if (opt.tiles_x < 1 || opt.tiles_y < 1 || opt.tiles_x > w || opt.tiles_y > h) {
    throw ConfigurationError("CLAHE tiling " + std::to_string(opt.tiles_x) + "x" + std::to_string(opt.tiles_y) +
                             " does not fit a " + std::to_string(w) + "x" + std::to_string(h) + " image");
  }
  if (w / opt.tiles_x < 2 || h / opt.tiles_y < 2) {
    throw ConfigurationError("CLAHE tiles must be at least 2x2 pixels");
  }
  if (!(opt.clip_limit >= 1.0)) throw ConfigurationError("CLAHE clip limit must be >= 1");

  const std::size_t tx = opt.tiles_x, ty = opt.tiles_y;
  // Pixel x belongs to tile floor(x * tx / w).
  auto tile_begin = [](std::size_t i, std::size_t n, std::size_t tiles) { return (i * n + tiles - 1) / tiles; };
  std::vector<GrayLut> luts(tx * ty);
  for (std::size_t j = 0; j < ty; ++j)
    for (std::size_t i = 0; i < tx; ++i) {
      const std::size_t x0 = tile_begin(i, w, tx), x1 = tile_begin(i + 1, w, tx);
      const std::size_t y0 = tile_begin(j, h, ty), y1 = tile_begin(j + 1, h, ty);
      const Histogram hist = histogram(img, Rect{x0, y0, x1 - x0, y1 - y0});
      luts[j * tx + i] = equalization_lut(clip_histogram(hist, clahe_clip_height(opt.clip_limit, hist.total)));
    }

  auto neighbours = [](std::size_t p, std::size_t n, std::size_t tiles) {
    const double f = (static_cast<double>(p) + 0.5) * static_cast<double>(tiles) / static_cast<double>(n) - 0.5;
    const double fl = std::floor(f);
    const double a = f - fl;
    const auto last = static_cast<std::ptrdiff_t>(tiles) - 1;
    const auto i0 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(fl), 0, last);
    const auto i1 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(fl) + 1, 0, last);
    return std::tuple<std::size_t, std::size_t, double>{static_cast<std::size_t>(i0), static_cast<std::size_t>(i1), a};
  };

  GrayImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto [j0, j1, b] = neighbours(y, h, ty);
    for (std::size_t x = 0; x < w; ++x) {
      const auto [i0, i1, a] = neighbours(x, w, tx);
      const std::uint8_t v = img.at(x, y);
      const double top = (1 - a) * luts[j0 * tx + i0][v] + a * luts[j0 * tx + i1][v];
      const double bottom = (1 - a) * luts[j1 * tx + i0][v] + a * luts[j1 * tx + i1][v];
      out.at(x, y) = clamp_round((1 - b) * top + b * bottom);
    }
  }
  return out;
}

}  // namespace semenet
