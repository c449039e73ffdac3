#include "semenet/explain/gradcam.hpp"

#include <algorithm>
#include <optional>

#include "semenet/error.hpp"
#include "semenet/image/geometry.hpp"
#include "semenet/tensor/ops.hpp"

namespace semenet {

bool Heatmap::zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

template <typename T>
std::vector<std::string> cam_layers(const Model<T>& model) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < model.layer_count(); ++i)
    if (model.layer_shape(i).size() == 3) out.push_back(model.layer_name(i));
  return out;
}

std::vector<double> weighted_feature_sum(const std::vector<double>& alpha, const std::vector<double>& maps,
                                         std::size_t h, std::size_t w) {
  const std::size_t plane = h * w;
  if (maps.size() != alpha.size() * plane) throw InvalidInputError("feature maps do not match the weights");
  std::vector<double> out(plane, 0.0);
  for (std::size_t k = 0; k < alpha.size(); ++k)
    for (std::size_t i = 0; i < plane; ++i) out[i] += alpha[k] * maps[k * plane + i];
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

void normalize_max(Heatmap& hm) {
  const double peak = hm.values.empty() ? 0.0 : *std::max_element(hm.values.begin(), hm.values.end());
  if (peak <= 0.0) {
    std::fill(hm.values.begin(), hm.values.end(), 0.0);
    return;
  }
  for (double& v : hm.values) v /= peak;
}

template <typename T>
GradCam grad_cam(const Model<T>& model, const Tensor<T>& input, int target_class, const std::string& layer) {
  const ModelConfig& cfg = model.config();
  if (cfg.task != Task::classify) throw UsageError("grad-cam needs a classification model");
  if (input.rank() != 4 || input.dim(0) != 1) {
    throw InvalidInputError("grad-cam takes one [1,C,H,W] image, got " + shape_str(input.shape()));
  }
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= cfg.classes) {
    throw InvalidInputError("target class " + std::to_string(target_class) + " outside [0," +
                            std::to_string(cfg.classes) + ")");
  }
  const std::string name = layer.empty() ? model.default_cam_layer() : layer;
  const auto valid = cam_layers(model);
  if (std::find(valid.begin(), valid.end(), name) == valid.end()) {
    std::string list;
    for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
    throw UsageError("unknown grad-cam layer '" + name + "'; valid layers: " + list);
  }

  Model<T> local = model.clone();
  Graph<T> g;
  std::optional<Var<T>> feature;
  ForwardOptions<T> opt;
  opt.tap = [&](const std::string& n, Var<T> v) {
    if (n == name) feature = v;
  };
  Var<T> logits = local.forward(g, g.variable(input), opt);
  Tensor<T> pick(logits.shape());
  pick[static_cast<std::size_t>(target_class)] = T{1};
  Var<T> score = ops::sum(ops::mul(logits, g.constant(std::move(pick))));
  g.backward(score);

  const Tensor<T>& a = feature->value();
  const std::size_t c = a.dim(1), h = a.dim(2), w = a.dim(3), plane = h * w;
  const Tensor<T>* grad = feature->grad();
  GradCam out;
  out.layer = name;
  out.target_class = target_class;
  out.score = static_cast<double>(score.value()[0]);
  out.alpha.assign(c, 0.0);
  if (grad) {
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < plane; ++i) s += static_cast<double>((*grad)[k * plane + i]);
      out.alpha[k] = s / static_cast<double>(plane);
    }
  }
  std::vector<double> maps(a.data().begin(), a.data().end());
  const std::vector<double> raw = weighted_feature_sum(out.alpha, maps, h, w);

  out.coarse = Heatmap(w, h);
  out.coarse.values = raw;
  normalize_max(out.coarse);
  const std::size_t ih = input.dim(2), iw = input.dim(3);
  out.heatmap = Heatmap(iw, ih);
  out.heatmap.values = resize_plane(raw, w, h, iw, ih);
  normalize_max(out.heatmap);
  return out;
}

double region_mass(const Heatmap& hm, const Rect& region) {
  if (region.area() == 0) throw InvalidInputError("region_mass: empty region");
  if (region.x + region.width > hm.width || region.y + region.height > hm.height) {
    throw InvalidInputError("region_mass: region exceeds the " + std::to_string(hm.width) + "x" +
                            std::to_string(hm.height) + " heatmap");
  }
  double inside = 0, total = 0;
  for (std::size_t y = 0; y < hm.height; ++y)
    for (std::size_t x = 0; x < hm.width; ++x) {
      const double v = hm.at(x, y);
      total += v;
      if (region.contains(x, y)) inside += v;
    }
  return total > 0 ? inside / total : 0.0;
}

template std::vector<std::string> cam_layers(const Model<float>&);
template std::vector<std::string> cam_layers(const Model<double>&);
template GradCam grad_cam(const Model<float>&, const Tensor<float>&, int, const std::string&);
template GradCam grad_cam(const Model<double>&, const Tensor<double>&, int, const std::string&);

}  // namespace semenet
