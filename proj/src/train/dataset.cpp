#include "semenet/train/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semenet/error.hpp"
#include "semenet/image/geometry.hpp"
#include "semenet/rng.hpp"

namespace semenet {

namespace {
constexpr std::uint64_t kClaheStream = 0xc1a4e;
constexpr std::uint64_t kRotateStream = 0x2071;
}  // namespace

void Dataset::validate() const {
  if (!labels.empty() && labels.size() != images.size()) throw InvalidInputError(split + ": label count differs");
  if (!masks.empty() && masks.size() != images.size()) throw InvalidInputError(split + ": mask count differs");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || (!class_names.empty() && static_cast<std::size_t>(labels[i]) >= class_names.size())) {
      throw InvalidInputError(split + ": label out of range at sample " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].width() != images[i].width() || masks[i].height() != images[i].height()) {
      throw InvalidInputError(split + ": mask size differs from image at sample " + std::to_string(i));
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.split = split;
  out.class_names = class_names;
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    if (!labels.empty()) out.labels.push_back(labels.at(i));
    if (!masks.empty()) out.masks.push_back(masks.at(i));
  }
  return out;
}

void augment_sample(GrayImage& img, MaskImage* mask, const AugmentConfig& cfg, std::uint64_t seed,
                    std::uint64_t epoch, std::uint64_t index) {
  if (cfg.clahe_mode == ClaheMode::per_epoch && cfg.clahe_fraction > 0) {
    Rng rng = make_rng(seed, {kClaheStream, epoch, index});
    if (uniform01(rng) < cfg.clahe_fraction) img = clahe(img, cfg.clahe);
  }
  if (cfg.rotation_deg > 0) {
    Rng rng = make_rng(seed, {kRotateStream, epoch, index});
    const double angle = uniform(rng, -cfg.rotation_deg, cfg.rotation_deg);
    img = rotate(img, angle, 0);
    if (mask) {
      GrayImage m = rotate(mask->to_gray(), angle, 0);
      for (auto& s : m.samples()) s = s >= 128 ? 255 : 0;
      *mask = MaskImage::from_gray(m);
    }
  }
}

std::vector<std::size_t> apply_offline_clahe(Dataset& data, const AugmentConfig& cfg, std::uint64_t seed) {
  if (!(cfg.clahe_fraction >= 0 && cfg.clahe_fraction <= 1)) throw ConfigurationError("CLAHE fraction must lie in [0, 1]");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {kClaheStream, 0x0ff});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  order.resize(static_cast<std::size_t>(std::llround(cfg.clahe_fraction * static_cast<double>(data.size()))));
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) data.images[i] = clahe(data.images[i], cfg.clahe);
  return order;
}

}  // namespace semenet
