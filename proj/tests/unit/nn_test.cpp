#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "semenet/error.hpp"
#include "semenet/nn/model.hpp"
#include "semenet/nn/moex.hpp"
#include "semenet/nn/presets.hpp"
#include "semenet/nn/receptive_field.hpp"
#include "semenet/nn/segment.hpp"
#include "semenet/tensor/gradcheck.hpp"
#include "semenet/tensor/ops.hpp"
#include "semenet/train/init.hpp"

using namespace semenet;
using nlohmann::json;

namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

ModelConfig single_layer(const std::string& kind, json params, Shape input, std::size_t classes = 1) {
  ModelConfig cfg;
  cfg.name = kind;
  cfg.task = Task::segment;
  cfg.input = {input[0], input[1], input[2]};
  cfg.classes = classes;
  cfg.layers.push_back(LayerSpec{kind, "x", std::move(params), {}});
  return cfg;
}

Parameter<double>& param(Model<double>& m, const std::string& name) {
  for (auto* p : m.parameters())
    if (p->name == name) return *p;
  throw std::runtime_error("no parameter " + name);
}

double sigmoid(double v) { return 1 / (1 + std::exp(-v)); }

}  // namespace

TEST(Gap, MeansAndHeadReuse) {
  Graph<double> g;
  Tensor<double> x({1, 2, 2, 2}, {1, 1, 1, 1, 1, 2, 3, 4});
  const auto out = ops::gap(g.constant(x)).value();
  EXPECT_DOUBLE_EQ(out[0], 1.0);
  EXPECT_DOUBLE_EQ(out[1], 2.5);

  ModelConfig cfg;
  cfg.name = "head";
  cfg.input = {512, 16, 16};
  cfg.classes = 3;
  cfg.layers = {LayerSpec{"gap", "gap", json::object(), {}}, LayerSpec{"dense", "head", json::object(), {}}};
  Model<double> m = build_model<double>(cfg, 1);
  EXPECT_EQ(m.predict(random_tensor({2, 512, 16, 16}, 1)).shape(), (Shape{2, 3}));
  EXPECT_EQ(m.predict(random_tensor({2, 512, 7, 7}, 2)).shape(), (Shape{2, 3}));
  EXPECT_EQ(param(m, "head.weight").value.shape(), (Shape{512, 3}));
}

TEST(Gap, InvariantToSpatialPermutation) {
  const Tensor<double> x = random_tensor({2, 3, 4, 5}, 4);
  std::vector<std::size_t> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Tensor<double> y(x.shape());
  for (std::size_t nc = 0; nc < 6; ++nc)
    for (std::size_t i = 0; i < 20; ++i) y[nc * 20 + perm[i]] = x[nc * 20 + i];
  Graph<double> g;
  const auto a = ops::gap(g.constant(x)).value(), b = ops::gap(g.constant(y)).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(SeBlock, ZeroWeightsHalveExactly) {
  Model<double> m(single_layer("se_block", {{"r", 2}}, {4, 3, 3}, 4));
  const Tensor<double> x = random_tensor({2, 4, 3, 3}, 5);
  const Tensor<double> y = m.predict(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], 0.5 * x[i]);
}

TEST(SeBlock, ScalarHandFormula) {
  Model<double> m(single_layer("se_block", {{"r", 1}}, {1, 2, 2}));
  param(m, "x.w1").value = Tensor<double>({1, 1}, {0.7});
  param(m, "x.w2").value = Tensor<double>({1, 1}, {-1.3});
  const double a = 0.9;
  const Tensor<double> y = m.predict(Tensor<double>({1, 1, 2, 2}, a));
  const double expect = sigmoid(-1.3 * std::max(0.0, 0.7 * a)) * a;
  for (double v : y.data()) EXPECT_NEAR(v, expect, 1e-15);
}

TEST(SeBlock, MatchesCompositionOracleAndGates) {
  const std::size_t n = 2, c = 8, hw = 9, r = 4;
  Model<double> m = build_model<double>(single_layer("se_block", {{"r", r}}, {c, 3, 3}, c), 11);
  const Tensor<double> x = random_tensor({n, c, 3, 3}, 12);
  const Tensor<double> y = m.predict(x);
  const auto& w1 = param(m, "x.w1").value;
  const auto& w2 = param(m, "x.w2").value;
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> z(c, 0), hidden(c / r, 0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < hw; ++i) z[ch] += x[(s * c + ch) * hw + i];
      z[ch] /= hw;
    }
    for (std::size_t j = 0; j < c / r; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) hidden[j] += z[ch] * w1[ch * (c / r) + j];
      hidden[j] = std::max(0.0, hidden[j]);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      double e = 0;
      for (std::size_t j = 0; j < c / r; ++j) e += hidden[j] * w2[j * c + ch];
      const double gate = sigmoid(e);
      ASSERT_GT(gate, 0.0);
      ASSERT_LT(gate, 1.0);
      std::size_t arg_in = 0, arg_out = 0;
      for (std::size_t i = 0; i < hw; ++i) {
        const std::size_t k = (s * c + ch) * hw + i;
        EXPECT_NEAR(y[k], gate * x[k], 1e-6);
        if (x[k] > x[(s * c + ch) * hw + arg_in]) arg_in = i;
        if (y[k] > y[(s * c + ch) * hw + arg_out]) arg_out = i;
      }
      EXPECT_EQ(arg_in, arg_out);
    }
  }
}

TEST(SeBlock, ReductionMustDivideChannels) {
  EXPECT_THROW(Model<double>(single_layer("se_block", {{"r", 3}}, {4, 2, 2}, 4)), ConfigurationError);
}

TEST(Moex, SelfExchangeIsIdentity) {
  for (auto norm : {ops::MomentNorm::positional, ops::MomentNorm::instance}) {
    Graph<double> g;
    const Tensor<double> h = random_tensor({3, 4, 3, 3}, 21);
    const std::vector<std::size_t> self{0, 1, 2};
    const auto out = ops::moex_exchange(g.constant(h), std::span<const std::size_t>(self), norm, 1e-5).value();
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(out[i], h[i], 1e-6);
  }
}

TEST(Moex, InstanceHandExample) {
  // Sample 0 holds [1,3] (mu 2, sigma 1); sample 1 holds [-2,2] (mu 0, sigma 2).
  Graph<double> g;
  const Tensor<double> h({2, 1, 1, 2}, {1, 3, -2, 2});
  const std::vector<std::size_t> partner{1, 0};
  const auto out =
      ops::moex_exchange(g.constant(h), std::span<const std::size_t>(partner), ops::MomentNorm::instance, 1e-12)
          .value();
  EXPECT_NEAR(out[0], -2.0, 1e-9);
  EXPECT_NEAR(out[1], 2.0, 1e-9);
}

TEST(Moex, PositionalMatchesOracleAndInjectsMoments) {
  const std::size_t n = 2, c = 4, hw = 9;
  const Tensor<double> h = random_tensor({n, c, 3, 3}, 22, -2, 3);
  const std::vector<std::size_t> partner{1, 0};
  const double eps = 1e-5;
  Graph<double> g;
  const auto out =
      ops::moex_exchange(g.constant(h), std::span<const std::size_t>(partner), ops::MomentNorm::positional, eps)
          .value();
  auto stats = [&](const Tensor<double>& t, std::size_t s, std::size_t p) {
    double mu = 0, var = 0;
    for (std::size_t ch = 0; ch < c; ++ch) mu += t[(s * c + ch) * hw + p];
    mu /= c;
    for (std::size_t ch = 0; ch < c; ++ch) var += std::pow(t[(s * c + ch) * hw + p] - mu, 2);
    return std::pair{mu, var / c};
  };
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < hw; ++p) {
      const auto [mu_a, var_a] = stats(h, s, p);
      const auto [mu_b, var_b] = stats(h, partner[s], p);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t k = (s * c + ch) * hw + p;
        const double expect = (h[k] - mu_a) / std::sqrt(var_a + eps) * std::sqrt(var_b + eps) + mu_b;
        EXPECT_NEAR(out[k], expect, 1e-12);
      }
    }
  }

  // The injected moments survive exactly only as eps -> 0 (the stabiliser
  // shrinks sigma_out by sqrt(var_A / (var_A + eps))).
  Graph<double> g2;
  const auto tight =
      ops::moex_exchange(g2.constant(h), std::span<const std::size_t>(partner), ops::MomentNorm::positional, 1e-12)
          .value();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t p = 0; p < hw; ++p) {
      const auto [mu_b, var_b] = stats(h, partner[s], p);
      const auto [mu_o, var_o] = stats(tight, s, p);
      EXPECT_NEAR(mu_o, mu_b, 1e-5);
      EXPECT_NEAR(std::sqrt(var_o), std::sqrt(var_b), 1e-5);
    }
}

TEST(Moex, PartnersPreferOtherClasses) {
  Rng rng(5);
  const std::vector<int> labels{0, 0, 0, 1, 1, 2, 2, 2};
  for (int trial = 0; trial < 50; ++trial) {
    const auto perm = moex_partners(labels, rng);
    std::vector<std::size_t> sorted(perm);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      EXPECT_EQ(sorted[i], i);
      EXPECT_NE(labels[perm[i]], labels[i]);
    }
  }
  const std::vector<int> same{4, 4, 4};
  for (int trial = 0; trial < 20; ++trial) {
    const auto perm = moex_partners(same, rng);
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_NE(perm[i], i);
  }
}

TEST(Moex, LambdaPolicy) {
  Rng rng(1);
  MoexSpec fixed;
  EXPECT_EQ(sample_lambda(fixed, rng), 0.9);
  MoexSpec beta;
  beta.alpha = 0.5;
  for (int i = 0; i < 100; ++i) {
    const double l = sample_lambda(beta, rng);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
  }
  MoexSpec bad;
  bad.lambda = 1.5;
  EXPECT_THROW(bad.validate(), ConfigurationError);
}

TEST(ReceptiveField, HandExamples) {
  const std::vector<RfLayer> ones{{1, 2}, {1, 3}, {1, 1}};
  EXPECT_EQ(receptive_field(ones), (std::vector<std::uint64_t>{1, 1, 1}));
  const std::vector<RfLayer> two3{{3, 1}, {3, 1}};
  EXPECT_EQ(receptive_field(two3), (std::vector<std::uint64_t>{3, 5}));
  const std::vector<RfLayer> strided{{3, 2}, {3, 1}};
  EXPECT_EQ(receptive_field(strided), (std::vector<std::uint64_t>{3, 7}));
  const std::vector<RfLayer> bad{{0, 1}};
  EXPECT_THROW(receptive_field(bad), InvalidInputError);
}

TEST(ReceptiveField, EqualsClassicRecursion) {
  Rng rng(77);
  for (int chain = 0; chain < 100; ++chain) {
    std::vector<RfLayer> layers(1 + uniform_index(rng, 12));
    for (auto& l : layers) l = {1 + uniform_index(rng, 7), 1 + uniform_index(rng, 3)};
    EXPECT_EQ(receptive_field(layers), receptive_field_classic(layers));
  }
}

TEST(Model, PresetShapes) {
  for (const std::string name : {"mini-seme", "mini-res", "mini-dense"}) {
    Model<float> m = build_model<float>(preset_config(name), 1);
    Tensor<float> x({2, 1, 64, 64}, 0.3f);
    EXPECT_EQ(m.predict(x).shape(), (Shape{2, 3})) << name;
  }
  Model<float> unet = build_model<float>(preset_config("unet-toy"), 1);
  EXPECT_EQ(unet.predict(Tensor<float>({1, 1, 64, 64}, 0.5f)).shape(), (Shape{1, 1, 64, 64}));
  EXPECT_EQ(Model<float>(preset_config("mini-seme")).default_cam_layer(), "block3");
  EXPECT_NE(Model<float>(preset_config("mini-seme")).moex(), nullptr);
  EXPECT_EQ(Model<float>(preset_config("mini-res")).moex(), nullptr);
  EXPECT_THROW(preset_config("resnet50"), ConfigurationError);
}

TEST(Model, ResidualBlockWithZeroLastGammaIsIdentity) {
  Model<double> m = build_model<double>(
      single_layer("residual_block", {{"out", 4}, {"se", true}, {"r", 2}, {"zero_init_last_bn", true}}, {4, 5, 5}, 4),
      3);
  const Tensor<double> x = random_tensor({2, 4, 5, 5}, 9, 0.0, 2.0);  // post-ReLU range
  Graph<double> g;
  const auto y = m.forward(g, g.constant(x), {.training = true, .moex_partner = {}, .tap = {}}).value();
  EXPECT_EQ(y, x);
  EXPECT_EQ(m.predict(x), x);
}

TEST(Model, DeterministicUnderSeed) {
  Model<float> a = build_model<float>(preset_config("mini-seme"), 42);
  Model<float> b = build_model<float>(preset_config("mini-seme"), 42);
  Model<float> c = build_model<float>(preset_config("mini-seme"), 43);
  const Tensor<float> x = random_tensor({2, 1, 64, 64}, 8).cast<float>();
  EXPECT_EQ(a.predict(x), b.predict(x));
  EXPECT_NE(a.predict(x), c.predict(x));
  Model<float> d = a.clone();
  EXPECT_EQ(d.predict(x), a.predict(x));
}

TEST(ModelConfig, JsonRoundTripAndErrors) {
  const ModelConfig cfg = preset_config("unet-toy");
  const ModelConfig back = ModelConfig::from_json(json::parse(cfg.to_json().dump()));
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_NO_THROW(Model<float>{back});

  json doc = preset_config("mini-seme").to_json();
  doc["layers"][0]["kernel"] = 3;
  try {
    Model<float> m(ModelConfig::from_json(doc));
    FAIL() << "unknown key accepted";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("kernel"), std::string::npos);
  }

  json doc2 = preset_config("mini-seme").to_json();
  doc2["layers"].back()["out"] = 5;  // head disagrees with classes
  EXPECT_THROW(Model<float>(ModelConfig::from_json(doc2)), ConfigurationError);
  json doc3 = preset_config("mini-seme").to_json();
  doc3["colour"] = "blue";
  EXPECT_THROW(ModelConfig::from_json(doc3), ConfigurationError);
  json doc4 = preset_config("mini-seme").to_json();
  doc4["layers"][5]["kind"] = "attention";
  EXPECT_THROW(Model<float>(ModelConfig::from_json(doc4)), ConfigurationError);
  json doc5 = preset_config("unet-toy").to_json();
  doc5["layers"][doc5["layers"].size() - 6]["inputs"] = {"nowhere"};
  EXPECT_THROW(Model<float>(ModelConfig::from_json(doc5)), ConfigurationError);
}

TEST(Segment, PredictMaskTieRulesAndErrors) {
  Model<float> unet = build_model<float>(preset_config("unet-toy", 32), 1);
  for (auto* p : unet.parameters())
    if (p->name.rfind("mask_head.", 0) == 0) p->value.fill(0.0f);
  const GrayImage img(32, 32, 120);
  EXPECT_EQ(unet_predict_mask(unet, img, 0.5).count(), 32u * 32u);
  EXPECT_EQ(unet_predict_mask(unet, img, 1.0).count(), 0u);
  EXPECT_THROW(unet_predict_mask(unet, img, 0.0), InvalidInputError);
  Model<float> cls(preset_config("mini-res"));
  EXPECT_THROW(unet_predict_mask(cls, GrayImage(64, 64), 0.5), UsageError);
}

TEST(Segment, CleanupKeepsTwoLargestAndFillsHoles) {
  MaskImage m(12, 8, 0);
  auto block = [&](std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x) m.at(x, y) = 1;
  };
  block(0, 0, 4, 6);   // 24 px, with a hole below
  block(6, 0, 5, 5);   // 25 px
  block(3, 7, 2, 1);   // speck
  m.at(2, 2) = 0;      // enclosed hole
  const MaskImage cleaned = clean_mask(m);
  EXPECT_EQ(cleaned.at(2, 2), 1);
  EXPECT_EQ(cleaned.at(3, 7), 0);
  EXPECT_EQ(cleaned.count(), 24u + 25u);
  EXPECT_EQ(clean_mask(m, {.enabled = false}), m);
}

TEST(GradCheck, FullModelEndToEnd) {
  BackboneOptions opt;
  opt.input = 32;
  opt.width = 4;
  opt.se_reduction = 2;
  Model<double> m = build_model<double>(mini_resnet(opt), 5);
  const Tensor<double> x = random_tensor({2, 1, 32, 32}, 6, 0, 1);
  const std::vector<std::size_t> partner{1, 0};
  GradCheckOptions gc;
  gc.max_elements = 6;
  gc.seed = 3;
  const auto report = check_gradients(
      "mini-seme", m.parameters(),
      [&](Graph<double>& g) {
        ForwardOptions<double> fo;
        fo.training = true;
        fo.moex_partner = partner;
        return m.forward(g, g.constant(x), fo);
      },
      gc);
  EXPECT_TRUE(report.passed(1e-3)) << "max error " << report.max_error();
  EXPECT_FALSE(report.skipped.empty());  // running statistics are buffers
}
