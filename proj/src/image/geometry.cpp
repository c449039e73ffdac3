#include "semenet/image/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "semenet/error.hpp"

namespace semenet {

namespace {

struct Tap {
  std::size_t i0, i1;
  double a;
};

// Source coordinate for output index p under half-pixel-centre mapping.
Tap resize_tap(std::size_t p, std::size_t n_src, std::size_t n_dst) {
  double s = (static_cast<double>(p) + 0.5) * static_cast<double>(n_src) / static_cast<double>(n_dst) - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(s));
  const std::size_t i1 = std::min(i0 + 1, n_src - 1);
  return {i0, i1, s - static_cast<double>(i0)};
}

template <typename Sample>
double bilinear(const Sample* src, std::size_t w, const Tap& tx, const Tap& ty) {
  const double top = (1 - tx.a) * src[ty.i0 * w + tx.i0] + tx.a * src[ty.i0 * w + tx.i1];
  const double bottom = (1 - tx.a) * src[ty.i1 * w + tx.i0] + tx.a * src[ty.i1 * w + tx.i1];
  return (1 - ty.a) * top + ty.a * bottom;
}

}  // namespace

GrayImage rotate(const GrayImage& img, double degrees, std::uint8_t fill) {
  if (!std::isfinite(degrees)) throw InvalidInputError("rotation angle must be finite");
  const std::size_t w = img.width(), h = img.height();
  if (degrees == 0.0) return img;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  constexpr double kEdge = 1e-9;
  const double max_x = static_cast<double>(w) - 1, max_y = static_cast<double>(h) - 1;

  GrayImage out(w, h, fill);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      double sx = cx + c * dx - s * dy;
      double sy = cy + s * dx + c * dy;
      if (sx < -kEdge || sy < -kEdge || sx > max_x + kEdge || sy > max_y + kEdge) continue;
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const Tap tx{x0, std::min(x0 + 1, w - 1), sx - static_cast<double>(x0)};
      const Tap ty{y0, std::min(y0 + 1, h - 1), sy - static_cast<double>(y0)};
      out.at(x, y) = clamp_round(bilinear(img.samples().data(), w, tx, ty));
    }
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t new_w, std::size_t new_h) {
  if (new_w == 0 || new_h == 0) throw InvalidInputError("resize target must be at least 1x1");
  if (img.empty()) throw InvalidInputError("resize of an empty image");
  GrayImage out(new_w, new_h);
  for (std::size_t y = 0; y < new_h; ++y) {
    const Tap ty = resize_tap(y, img.height(), new_h);
    for (std::size_t x = 0; x < new_w; ++x) {
      out.at(x, y) = clamp_round(bilinear(img.samples().data(), img.width(), resize_tap(x, img.width(), new_w), ty));
    }
  }
  return out;
}

std::vector<double> resize_plane(const std::vector<double>& samples, std::size_t w, std::size_t h,
                                 std::size_t new_w, std::size_t new_h) {
  if (new_w == 0 || new_h == 0 || w == 0 || h == 0) throw InvalidInputError("resize extents must be positive");
  if (samples.size() != w * h) throw InvalidInputError("sample plane does not match its extents");
  std::vector<double> out(new_w * new_h);
  for (std::size_t y = 0; y < new_h; ++y) {
    const Tap ty = resize_tap(y, h, new_h);
    for (std::size_t x = 0; x < new_w; ++x) out[y * new_w + x] = bilinear(samples.data(), w, resize_tap(x, w, new_w), ty);
  }
  return out;
}

}  // namespace semenet
