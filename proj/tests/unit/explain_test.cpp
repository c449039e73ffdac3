#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "semenet/error.hpp"
#include "semenet/explain/gradcam.hpp"
#include "semenet/explain/overlay.hpp"
#include "semenet/nn/presets.hpp"
#include "semenet/train/init.hpp"

using namespace semenet;
using json = nlohmann::json;

namespace {

// 1×1 conv producing two maps, GAP, dense head over three classes.
Model<double> two_map_model(const std::vector<double>& conv, const std::vector<double>& head) {
  json doc = {{"name", "toy"},
              {"task", "classify"},
              {"input", {1, 4, 4}},
              {"classes", 3},
              {"layers",
               {{{"kind", "conv"}, {"name", "feat"}, {"out", 2}, {"k", 1}},
                {{"kind", "gap"}, {"name", "pool"}},
                {{"kind", "dense"}, {"name", "head"}}}}};
  Model<double> m(ModelConfig::from_json(doc));
  for (auto* p : m.parameters()) {
    if (p->name == "feat.weight") p->value = Tensor<double>({2, 1, 1, 1}, std::vector<double>(conv));
    if (p->name == "head.weight") p->value = Tensor<double>({2, 3}, std::vector<double>(head));
  }
  return m;
}

Tensor<double> ramp() {
  Tensor<double> x({1, 1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x[i] = (static_cast<double>(i) - 6.0) / 10.0;
  return x;
}

// Class logit with feature map k of `layer` shifted by eps everywhere.
double bumped_score(Model<double>& m, const Tensor<double>& x, int cls, const std::string& layer, std::size_t k,
                    double eps) {
  Graph<double> g;
  ForwardOptions<double> opt;
  opt.tap = [&](const std::string& n, Var<double> v) {
    if (n != layer) return;
    Tensor<double>& a = g.mutable_value(v);
    const std::size_t plane = a.dim(2) * a.dim(3);
    for (std::size_t i = 0; i < plane; ++i) a[k * plane + i] += eps;
  };
  return m.forward(g, g.constant(x), opt).value()[static_cast<std::size_t>(cls)];
}

}  // namespace

TEST(GradCam, TwoMapToyMatchesHandComputation) {
  // head column for class 1 is (0.8, -0.4): alpha = (0.8/16, -0.4/16).
  Model<double> m = two_map_model({1.0, -2.0}, {0.1, 0.8, 0.0, 0.3, -0.4, 0.2});
  const Tensor<double> x = ramp();
  const GradCam cam = grad_cam(m, x, 1);
  EXPECT_EQ(cam.layer, "feat");
  ASSERT_EQ(cam.alpha.size(), 2u);
  EXPECT_NEAR(cam.alpha[0], 0.05, 1e-12);
  EXPECT_NEAR(cam.alpha[1], -0.025, 1e-12);
  // α1·x + α2·(-2x) = 0.1·x → ReLU keeps the positive ramp; max at x = 0.9.
  for (std::size_t i = 0; i < 16; ++i) {
    const double want = std::max(0.1 * x[i], 0.0) / 0.09;
    EXPECT_NEAR(cam.coarse.values[i], want, 1e-12) << i;
    EXPECT_NEAR(cam.heatmap.values[i], want, 1e-12) << i;  // same size: no resampling
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const double h = 1e-4;
    const double fd = (bumped_score(m, x, 1, "feat", k, h) - bumped_score(m, x, 1, "feat", k, -h)) / (2 * h * 16);
    EXPECT_NEAR(cam.alpha[k], fd, 1e-2 * std::abs(fd));
  }
}

TEST(GradCam, ZeroGradientGivesZeroMap) {
  Model<double> m = two_map_model({1.0, 1.0}, {0.5, 0.0, 0.1, 0.5, 0.0, 0.1});
  const GradCam cam = grad_cam(m, ramp(), 1);
  EXPECT_TRUE(cam.heatmap.zero());
  EXPECT_TRUE(cam.coarse.zero());
  EXPECT_EQ(region_mass(cam.heatmap, {0, 0, 2, 2}), 0.0);
}

TEST(GradCam, SingleMapIsNormalisedRelu) {
  json doc = {{"name", "one"},
              {"task", "classify"},
              {"input", {1, 4, 4}},
              {"classes", 2},
              {"layers",
               {{{"kind", "conv"}, {"name", "feat"}, {"out", 1}, {"k", 1}},
                {{"kind", "gap"}, {"name", "pool"}},
                {{"kind", "dense"}, {"name", "head"}}}}};
  Model<double> m(ModelConfig::from_json(doc));
  for (auto* p : m.parameters()) {
    if (p->name == "feat.weight") p->value.fill(1.0);
    if (p->name == "head.weight") p->value = Tensor<double>({1, 2}, {2.0, -1.0});
  }
  const Tensor<double> x = ramp();
  const GradCam cam = grad_cam(m, x, 0);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(cam.heatmap.values[i], std::max(x[i], 0.0) / 0.9, 1e-12);
}

TEST(GradCam, BackboneAlphaMatchesFiniteDifferences) {
  BackboneOptions opt;
  opt.input = 32;
  opt.width = 4;
  opt.se_reduction = 2;
  Model<double> m = build_model<double>(mini_resnet(opt, "fd"), 5);
  Tensor<double> x({1, 1, 32, 32});
  Rng rng(2);
  for (auto& v : x.data()) v = uniform01(rng);
  const std::string layer = "block1";
  const GradCam cam = grad_cam(m, x, 2, layer);
  const std::size_t plane = 8 * 8;
  ASSERT_EQ(cam.coarse.width, 8u);
  for (std::size_t k = 0; k < cam.alpha.size(); ++k) {
    const double h = 1e-5;
    const double fd = (bumped_score(m, x, 2, layer, k, h) - bumped_score(m, x, 2, layer, k, -h)) / (2 * h * plane);
    EXPECT_NEAR(cam.alpha[k], fd, 1e-2 * std::max(std::abs(fd), 1e-6)) << "map " << k;
  }
  EXPECT_EQ(cam.heatmap.width, 32u);
  double peak = 0;
  for (double v : cam.heatmap.values) {
    EXPECT_GE(v, 0.0);
    peak = std::max(peak, v);
  }
  if (!cam.heatmap.zero()) {
    EXPECT_EQ(peak, 1.0);
  }
}

TEST(GradCam, InvariantToLogitScale) {
  BackboneOptions opt;
  opt.input = 32;
  opt.width = 4;
  opt.se_reduction = 2;
  Model<double> a = build_model<double>(mini_resnet(opt, "s"), 6);
  Model<double> b = a.clone();
  for (auto* p : b.parameters())
    if (p->name.rfind("head.", 0) == 0)
      for (auto& v : p->value.data()) v *= 3.5;
  Tensor<double> x({1, 1, 32, 32});
  Rng rng(3);
  for (auto& v : x.data()) v = uniform01(rng);
  const GradCam ca = grad_cam(a, x, 0), cb = grad_cam(b, x, 0);
  for (std::size_t i = 0; i < ca.heatmap.values.size(); ++i) {
    EXPECT_NEAR(ca.heatmap.values[i], cb.heatmap.values[i], 1e-5);
  }
}

TEST(GradCam, RejectsBadRequests) {
  Model<double> m = two_map_model({1.0, -2.0}, {0.1, 0.8, 0.0, 0.3, -0.4, 0.2});
  try {
    grad_cam(m, ramp(), 0, "pool");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("valid layers: feat"), std::string::npos) << e.what();
  }
  EXPECT_THROW(grad_cam(m, ramp(), 3), InvalidInputError);
  EXPECT_THROW(grad_cam(m, Tensor<double>({2, 1, 4, 4}), 0), InvalidInputError);
  Model<double> unet(unet_toy(16, 4));
  EXPECT_THROW(grad_cam(unet, Tensor<double>({1, 1, 16, 16}), 0), UsageError);
}

TEST(RegionMass, Examples) {
  Heatmap uniform(6, 4, 0.3);
  EXPECT_DOUBLE_EQ(region_mass(uniform, {0, 0, 6, 4}), 1.0);
  EXPECT_DOUBLE_EQ(region_mass(uniform, {0, 0, 3, 4}), 0.5);
  Heatmap corner(6, 4);
  corner.at(5, 3) = 1.0;
  EXPECT_EQ(region_mass(corner, {4, 2, 2, 2}), 1.0);
  Heatmap ramp_map(6, 4);
  for (std::size_t i = 0; i < ramp_map.values.size(); ++i) ramp_map.values[i] = static_cast<double>(i % 7) / 6;
  const double parts = region_mass(ramp_map, {0, 0, 2, 4}) + region_mass(ramp_map, {2, 0, 4, 1}) +
                       region_mass(ramp_map, {2, 1, 4, 3});
  EXPECT_NEAR(parts, 1.0, 1e-12);
  EXPECT_THROW(region_mass(uniform, {1, 1, 0, 2}), InvalidInputError);
  EXPECT_THROW(region_mass(uniform, {4, 0, 3, 1}), InvalidInputError);
}

TEST(Overlay, ColormapAndBlend) {
  EXPECT_EQ(jet(0.0), (std::array<std::uint8_t, 3>{0, 0, 255}));
  EXPECT_EQ(jet(1.0), (std::array<std::uint8_t, 3>{255, 0, 0}));
  EXPECT_EQ(jet(0.125), (std::array<std::uint8_t, 3>{0, 128, 255}));
  EXPECT_EQ(jet(0.6), (std::array<std::uint8_t, 3>{102, 255, 0}));
  EXPECT_EQ(jet(2.0), jet(1.0));

  GrayImage img(2, 1);
  img.at(0, 0) = 100;
  img.at(1, 0) = 7;
  Heatmap hm(2, 1);
  hm.at(0, 0) = 0.5;
  hm.at(1, 0) = 1.0;
  const RgbImage gray = overlay(img, hm, 0.0);
  EXPECT_EQ(gray.pixel(0, 0), (std::array<std::uint8_t, 3>{100, 100, 100}));
  EXPECT_EQ(gray.pixel(1, 0), (std::array<std::uint8_t, 3>{7, 7, 7}));
  const RgbImage pure = overlay(img, hm, 1.0);
  EXPECT_EQ(pure.pixel(0, 0), jet(0.5));
  EXPECT_EQ(pure.pixel(1, 0), jet(1.0));
  // 0.7·100 + 0.3·(0,255,0) = (70, 146.5, 70) → half rounds up.
  EXPECT_EQ(overlay(img, hm, 0.3).pixel(0, 0), (std::array<std::uint8_t, 3>{70, 147, 70}));
  EXPECT_THROW(overlay(img, Heatmap(3, 1), 0.5), InvalidInputError);
  EXPECT_THROW(overlay(img, hm, 1.5), InvalidInputError);
  EXPECT_EQ(heatmap_to_gray(hm).samples(), (std::vector<std::uint8_t>{128, 255}));
}
