#include "semenet/explain/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "semenet/error.hpp"

namespace semenet {

std::array<std::uint8_t, 3> jet(double v) {
  v = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  const double pos = v * 4.0;
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), 3);
  const double f = pos - static_cast<double>(i);
  std::array<std::uint8_t, 3> out{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    out[ch] = clamp_round((1.0 - f) * kJetAnchors[i][ch] + f * kJetAnchors[i + 1][ch]);
  }
  return out;
}

RgbImage overlay(const GrayImage& img, const Heatmap& hm, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInputError("overlay alpha must lie in [0,1]");
  if (hm.width != img.width() || hm.height != img.height()) {
    throw InvalidInputError("heatmap " + std::to_string(hm.width) + "x" + std::to_string(hm.height) +
                            " does not match the image");
  }
  RgbImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto colour = jet(hm.at(x, y));
      const double gray = img.at(x, y);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out.samples[3 * (y * img.width() + x) + ch] = clamp_round((1.0 - alpha) * gray + alpha * colour[ch]);
      }
    }
  return out;
}

GrayImage heatmap_to_gray(const Heatmap& hm) {
  GrayImage out(hm.width, hm.height);
  for (std::size_t i = 0; i < hm.values.size(); ++i) out.samples()[i] = clamp_round(hm.values[i] * 255.0);
  return out;
}

}  // namespace semenet
