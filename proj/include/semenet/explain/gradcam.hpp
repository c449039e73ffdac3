#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "semenet/image/image.hpp"
#include "semenet/nn/model.hpp"

namespace semenet {

/// Saliency grid with values in [0,1]; the maximum is 1 unless the map is
/// identically zero.
struct Heatmap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major

  Heatmap() = default;
  Heatmap(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  bool zero() const;
};

struct GradCam {
  std::string layer;
  int target_class = 0;
  double score = 0;           // pre-softmax logit of target_class
  std::vector<double> alpha;  // one weight per feature map
  Heatmap coarse;             // at feature-map resolution
  Heatmap heatmap;            // upsampled to the input size
};

/// Feature maps a Grad-CAM can be taken from: layers with C×H×W outputs.
template <typename T>
std::vector<std::string> cam_layers(const Model<T>& model);

/// Grad-CAM for a single [1,C,H,W] input. An empty layer name selects
/// model.default_cam_layer(). The model is copied, so concurrent calls on
/// one model are safe.
template <typename T>
GradCam grad_cam(const Model<T>& model, const Tensor<T>& input, int target_class,
                 const std::string& layer = {});

/// ReLU(Σ α_k A_k) at feature resolution, before normalisation.
std::vector<double> weighted_feature_sum(const std::vector<double>& alpha, const std::vector<double>& maps,
                                         std::size_t h, std::size_t w);

/// Divides by the maximum; an all-zero map stays zero.
void normalize_max(Heatmap& hm);

/// Σ heatmap inside `region` / Σ heatmap; 0 for an all-zero map.
double region_mass(const Heatmap& hm, const Rect& region);

}  // namespace semenet
