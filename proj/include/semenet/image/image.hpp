#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace semenet {

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t area() const { return width * height; }
  bool contains(std::size_t px, std::size_t py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  bool operator==(const Rect&) const = default;
};

/// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  static constexpr int kLevels = 256;

  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> samples);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  std::uint8_t& at(std::size_t x, std::size_t y) { return samples_[y * width_ + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return samples_[y * width_ + x]; }
  const std::vector<std::uint8_t>& samples() const noexcept { return samples_; }
  std::vector<std::uint8_t>& samples() noexcept { return samples_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// Binary raster with samples in {0,1}.
class MaskImage {
 public:
  MaskImage() = default;
  MaskImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  MaskImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> samples);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::uint8_t& at(std::size_t x, std::size_t y) { return samples_[y * width_ + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return samples_[y * width_ + x]; }
  const std::vector<std::uint8_t>& samples() const noexcept { return samples_; }
  std::size_t count() const;

  /// 0 -> 0, 1 -> 255.
  GrayImage to_gray() const;
  /// Nonzero samples become 1.
  static MaskImage from_gray(const GrayImage& img);

  bool operator==(const MaskImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> samples;  // 3 per pixel

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), samples(w * h * 3, 0) {}
  std::array<std::uint8_t, 3> pixel(std::size_t x, std::size_t y) const {
    const std::size_t i = 3 * (y * width + x);
    return {samples[i], samples[i + 1], samples[i + 2]};
  }
};

struct Histogram {
  std::array<std::uint64_t, GrayImage::kLevels> bins{};
  std::uint64_t total = 0;
};

/// Exact per-level pixel counts, optionally restricted to a region.
Histogram histogram(const GrayImage& img, std::optional<Rect> region = std::nullopt);

/// Keeps pixels where the mask is 1 and blackens the rest.
GrayImage apply_mask(const GrayImage& img, const MaskImage& mask);

/// Round half up, clamped to [0, 255].
std::uint8_t clamp_round(double v);

}  // namespace semenet
