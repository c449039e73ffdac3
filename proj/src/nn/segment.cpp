#include "semenet/nn/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semenet/error.hpp"

namespace semenet {

template <typename T>
Tensor<T> images_to_tensor(std::span<const GrayImage* const> images) {
  if (images.empty()) throw InvalidInputError("no images to batch");
  const std::size_t w = images[0]->width(), h = images[0]->height();
  Tensor<T> out({images.size(), 1, h, w});
  auto d = out.data();
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n]->width() != w || images[n]->height() != h) throw InvalidInputError("batch images differ in size");
    const auto& s = images[n]->samples();
    for (std::size_t i = 0; i < s.size(); ++i) d[n * s.size() + i] = static_cast<T>(s[i]) / T{255};
  }
  return out;
}

template <typename T>
Tensor<T> image_to_tensor(const GrayImage& img) {
  const GrayImage* one[] = {&img};
  return images_to_tensor<T>(one);
}

template Tensor<float> images_to_tensor(std::span<const GrayImage* const>);
template Tensor<double> images_to_tensor(std::span<const GrayImage* const>);
template Tensor<float> image_to_tensor(const GrayImage&);
template Tensor<double> image_to_tensor(const GrayImage&);

namespace {

// 4-connected labelling of pixels equal to `value`; returns labels (0 =
// other value) and per-label sizes (index 0 unused).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> label(const MaskImage& m, std::uint8_t value) {
  const std::size_t w = m.width(), h = m.height();
  std::vector<std::size_t> labels(w * h, 0), sizes{0}, stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (m.samples()[start] != value || labels[start]) continue;
    const std::size_t id = sizes.size();
    sizes.push_back(0);
    stack.push_back(start);
    labels[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++sizes[id];
      const std::size_t x = p % w, y = p / w;
      auto visit = [&](std::size_t q) {
        if (m.samples()[q] == value && !labels[q]) {
          labels[q] = id;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
  }
  return {std::move(labels), std::move(sizes)};
}

}  // namespace

MaskImage clean_mask(const MaskImage& mask, const MaskCleanup& opt) {
  if (!opt.enabled) return mask;
  const std::size_t w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> out(w * h, 0);

  auto [fg, fg_sizes] = label(mask, 1);
  std::vector<std::size_t> order(fg_sizes.size() - 1);
  std::iota(order.begin(), order.end(), 1);
  // Largest first; ties by label for determinism.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fg_sizes[a] > fg_sizes[b]; });
  std::vector<bool> keep(fg_sizes.size(), false);
  for (std::size_t i = 0; i < std::min(opt.keep_components, order.size()); ++i) keep[order[i]] = true;
  for (std::size_t p = 0; p < w * h; ++p) out[p] = fg[p] && keep[fg[p]] ? 1 : 0;

  MaskImage kept(w, h, out);
  if (!opt.fill_holes) return kept;
  auto [bg, bg_sizes] = label(kept, 0);
  std::vector<bool> touches(bg_sizes.size(), false);
  for (std::size_t x = 0; x < w; ++x) touches[bg[x]] = touches[bg[(h - 1) * w + x]] = true;
  for (std::size_t y = 0; y < h; ++y) touches[bg[y * w]] = touches[bg[y * w + w - 1]] = true;
  for (std::size_t p = 0; p < w * h; ++p)
    if (bg[p] && !touches[bg[p]]) out[p] = 1;
  return MaskImage(w, h, std::move(out));
}

MaskImage unet_predict_mask(Model<float>& model, const GrayImage& img, double threshold, const MaskCleanup& cleanup) {
  const ModelConfig& cfg = model.config();
  if (cfg.task != Task::segment || cfg.classes != 1) {
    throw UsageError("model '" + cfg.name + "' is not a one-channel segmentation model");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidInputError("mask threshold must lie in (0, 1]");
  const Tensor<float> logits = model.predict(image_to_tensor<float>(img));
  std::vector<std::uint8_t> bits(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i])));
    bits[i] = prob >= threshold ? 1 : 0;
  }
  return clean_mask(MaskImage(img.width(), img.height(), std::move(bits)), cleanup);
}

}  // namespace semenet
