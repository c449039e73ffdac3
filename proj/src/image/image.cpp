#include "semenet/image/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semenet/error.hpp"

namespace semenet {

namespace {

void check_dims(std::size_t w, std::size_t h, std::size_t n) {
  if (w * h != n) {
    throw InvalidInputError("image " + std::to_string(w) + "x" + std::to_string(h) + " with " +
                            std::to_string(n) + " samples");
  }
}

}  // namespace

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), samples_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  check_dims(width_, height_, samples_.size());
}

MaskImage::MaskImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), samples_(width * height, fill ? 1 : 0) {}

MaskImage::MaskImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  check_dims(width_, height_, samples_.size());
  for (auto& s : samples_) {
    if (s > 1) throw InvalidInputError("mask samples must be 0 or 1");
  }
}

std::size_t MaskImage::count() const {
  return static_cast<std::size_t>(std::count(samples_.begin(), samples_.end(), std::uint8_t{1}));
}

GrayImage MaskImage::to_gray() const {
  std::vector<std::uint8_t> out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(), [](std::uint8_t s) { return s ? 255 : 0; });
  return GrayImage(width_, height_, std::move(out));
}

MaskImage MaskImage::from_gray(const GrayImage& img) {
  std::vector<std::uint8_t> out(img.size());
  std::transform(img.samples().begin(), img.samples().end(), out.begin(),
                 [](std::uint8_t s) { return s ? 1 : 0; });
  return MaskImage(img.width(), img.height(), std::move(out));
}

Histogram histogram(const GrayImage& img, std::optional<Rect> region) {
  const Rect r = region.value_or(Rect{0, 0, img.width(), img.height()});
  if (r.area() == 0) throw InvalidInputError("histogram over an empty region");
  if (r.x + r.width > img.width() || r.y + r.height > img.height()) {
    throw InvalidInputError("histogram region exceeds image bounds");
  }
  Histogram h;
  for (std::size_t y = r.y; y < r.y + r.height; ++y)
    for (std::size_t x = r.x; x < r.x + r.width; ++x) ++h.bins[img.at(x, y)];
  h.total = r.area();
  return h;
}

GrayImage apply_mask(const GrayImage& img, const MaskImage& mask) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw InvalidInputError("mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                            " does not match image " + std::to_string(img.width()) + "x" +
                            std::to_string(img.height()));
  }
  GrayImage out = img;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!mask.samples()[i]) out.samples()[i] = 0;
  return out;
}

std::uint8_t clamp_round(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace semenet
