#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "semenet/error.hpp"
#include "semenet/rng.hpp"
#include "semenet/tensor/gradcheck.hpp"
#include "semenet/tensor/kernels.hpp"
#include "semenet/tensor/ops.hpp"

using namespace semenet;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, Shape s) {
  Tensor<T> t(std::move(s));
  for (auto& v : t.data()) v = static_cast<T>(uniform(rng, -1, 1));
  return t;
}

// Six-loop correlation, written independently of the library kernels.
std::vector<double> conv_oracle(const Tensor<float>& x, const Tensor<float>& k, int stride, int pad) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int f = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> y(n * f * oh * ow, 0.0);
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < f; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j)
          for (int ch = 0; ch < c; ++ch)
            for (int a = 0; a < kh; ++a)
              for (int e = 0; e < kw; ++e) {
                int yy = i * stride - pad + a, xx = j * stride - pad + e;
                if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
                y[((b * f + o) * oh + i) * ow + j] +=
                    double(x[((b * c + ch) * h + yy) * w + xx]) * k[((o * c + ch) * kh + a) * kw + e];
              }
  return y;
}

}  // namespace

TEST(Tensor, ShapeInvariant) {
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>{1, 2, 3}), InvalidInputError);
  Tensor<float> t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(t.reshaped({4}), InvalidInputError);
}

TEST(Conv2d, IdentityKernel) {
  Graph<float> g;
  auto x = g.constant(Tensor<float>({1, 1, 2, 2}, {1, 2, 3, 4}));
  auto k = g.constant(Tensor<float>({1, 1, 1, 1}, {1}));
  auto y = ops::conv2d(x, k);
  EXPECT_EQ(y.value().vec(), (std::vector<float>{1, 2, 3, 4}));
}

TEST(Conv2d, ZeroKernel) {
  Rng rng(3);
  Graph<float> g;
  auto x = g.constant(random_tensor<float>(rng, {2, 3, 6, 5}));
  auto k = g.constant(Tensor<float>({4, 3, 3, 3}));
  auto y = ops::conv2d(x, k, {2, 2, 1, 1});
  EXPECT_EQ(y.shape(), (Shape{2, 4, 3, 3}));
  for (float v : y.value().data()) EXPECT_EQ(v, 0.0f);
}

TEST(Conv2d, MatchesLoopOracle) {
  for (auto algo : {ops::ConvAlgorithm::direct, ops::ConvAlgorithm::patch_matrix}) {
    Rng rng(11);
    auto xt = random_tensor<float>(rng, {1, 2, 5, 5});
    auto kt = random_tensor<float>(rng, {3, 2, 3, 3});
    Graph<float> g;
    auto y = ops::conv2d(g.constant(xt), g.constant(kt), {2, 2, 1, 1, algo});
    ASSERT_EQ(y.shape(), (Shape{1, 3, 3, 3}));
    auto ref = conv_oracle(xt, kt, 2, 1);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.value()[i], ref[i], 1e-6);
  }
}

TEST(Conv2d, PatchMatrixAgreesWithDirectOnManyShapes) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    kernels::ConvGeometry geo;
    geo.batch = 1 + trial % 3;
    geo.in_channels = 1 + trial % 4;
    geo.in_h = 5 + trial % 7;
    geo.in_w = 4 + trial % 5;
    geo.out_channels = 1 + trial % 5;
    geo.kernel_h = geo.kernel_w = 1 + 2 * (trial % 2);
    geo.stride_h = geo.stride_w = 1 + trial % 2;
    geo.pad_h = geo.pad_w = trial % 3 == 0 ? 0 : 1;
    auto x = random_tensor<float>(rng, {geo.batch, geo.in_channels, geo.in_h, geo.in_w});
    auto w = random_tensor<float>(rng, {geo.out_channels, geo.in_channels, geo.kernel_h, geo.kernel_w});
    auto dy = random_tensor<float>(rng, {geo.batch, geo.out_channels, geo.out_h(), geo.out_w()});
    std::vector<float> y1(dy.size()), y2(dy.size());
    kernels::conv2d_forward<float>(geo, x.data(), w.data(), y1);
    kernels::reference::conv2d_forward<float>(geo, x.data(), w.data(), y2);
    for (std::size_t i = 0; i < y1.size(); ++i) ASSERT_NEAR(y1[i], y2[i], 1e-6);
    std::vector<float> dx1(x.size()), dx2(x.size()), dw1(w.size()), dw2(w.size());
    kernels::conv2d_backward_input<float>(geo, w.data(), dy.data(), dx1);
    kernels::reference::conv2d_backward_input<float>(geo, w.data(), dy.data(), dx2);
    for (std::size_t i = 0; i < dx1.size(); ++i) ASSERT_NEAR(dx1[i], dx2[i], 1e-5);
    kernels::conv2d_backward_weight<float>(geo, x.data(), dy.data(), dw1);
    kernels::reference::conv2d_backward_weight<float>(geo, x.data(), dy.data(), dw2);
    for (std::size_t i = 0; i < dw1.size(); ++i) ASSERT_NEAR(dw1[i], dw2[i], 1e-5);
  }
}

TEST(Conv2d, ChannelMismatchIsConfigurationError) {
  Graph<float> g;
  auto x = g.constant(Tensor<float>({1, 2, 4, 4}));
  auto k = g.constant(Tensor<float>({1, 3, 3, 3}));
  EXPECT_THROW(ops::conv2d(x, k), ConfigurationError);
  auto big = g.constant(Tensor<float>({1, 2, 7, 7}));
  EXPECT_THROW(ops::conv2d(x, big), ConfigurationError);
}

TEST(Dense, HandValues) {
  Graph<float> g;
  auto y = ops::dense(g.constant(Tensor<float>({1, 2}, {1, 2})), g.constant(Tensor<float>({2, 2}, {1, 0, 0, 1})),
                      g.constant(Tensor<float>({2})));
  EXPECT_EQ(y.value().vec(), (std::vector<float>{1, 2}));
  auto z = ops::dense(g.constant(Tensor<float>({1, 1}, {1})), g.constant(Tensor<float>({1, 2}, {2, 3})),
                      g.constant(Tensor<float>({2}, {5, 5})));
  EXPECT_EQ(z.value().vec(), (std::vector<float>{7, 8}));
  auto s = ops::dense(g.constant(Tensor<float>({1, 2}, {1, 1})), g.constant(Tensor<float>({2, 1}, {2, 3})),
                      g.constant(Tensor<float>({1}, {5})));
  EXPECT_EQ(s.value()[0], 10.0f);
}

TEST(Dense, MatchesTripleLoop) {
  Rng rng(2);
  auto x = random_tensor<float>(rng, {4, 8});
  auto w = random_tensor<float>(rng, {8, 3});
  Graph<float> g;
  auto y = ops::dense(g.constant(x), g.constant(w));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 8; ++k) s += double(x[i * 8 + k]) * w[k * 3 + j];
      EXPECT_NEAR(y.value()[i * 3 + j], s, 1e-6);
    }
  EXPECT_THROW(ops::dense(g.constant(x), g.constant(Tensor<float>({7, 3}))), ConfigurationError);
}

TEST(BatchNorm, ConstantInputGivesZeros) {
  Graph<float> g;
  Tensor<float> rm({2}), rv({2}, 1.0f);
  auto y = ops::batchnorm2d(g.constant(Tensor<float>({2, 2, 3, 3}, 4.0f)), g.constant(Tensor<float>({2}, 1.0f)),
                            g.constant(Tensor<float>({2})), rm, rv);
  for (float v : y.value().data()) EXPECT_EQ(v, 0.0f);
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  Rng rng(4);
  Graph<float> g;
  Tensor<float> rm({3}), rv({3}, 1.0f);
  auto y = ops::batchnorm2d(g.constant(random_tensor<float>(rng, {2, 3, 4, 4})), g.constant(Tensor<float>({3})),
                            g.constant(Tensor<float>({3}, 0.25f)), rm, rv);
  for (float v : y.value().data()) EXPECT_EQ(v, 0.25f);
}

TEST(BatchNorm, NormalisesPerChannelAndTracksRunningStats) {
  Rng rng(8);
  auto x = random_tensor<float>(rng, {4, 3, 5, 5});
  for (auto& v : x.data()) v = 3 * v + 2;
  Graph<float> g;
  Tensor<float> rm({3}), rv({3}, 1.0f);
  auto y = ops::batchnorm2d(g.constant(x), g.constant(Tensor<float>({3}, 1.0f)), g.constant(Tensor<float>({3})), rm, rv);
  for (int c = 0; c < 3; ++c) {
    double m = 0, v = 0, xm = 0;
    for (int n = 0; n < 4; ++n)
      for (int j = 0; j < 25; ++j) {
        m += y.value()[(n * 3 + c) * 25 + j];
        xm += x[(n * 3 + c) * 25 + j];
      }
    m /= 100;
    xm /= 100;
    double xv = 0;
    for (int n = 0; n < 4; ++n)
      for (int j = 0; j < 25; ++j) {
        v += std::pow(y.value()[(n * 3 + c) * 25 + j] - m, 2);
        xv += std::pow(x[(n * 3 + c) * 25 + j] - xm, 2);
      }
    v /= 100;
    EXPECT_LT(std::abs(m), 1e-5);
    // Variance is var/(var+eps) with eps = 1e-5.
    const double var = xv / 100;
    EXPECT_NEAR(v, var / (var + 1e-5), 1e-5);
    EXPECT_NEAR(rm[c], 0.1 * xm, 1e-5);
    EXPECT_NEAR(rv[c], 0.9 + 0.1 * xv / 99, 1e-4);
  }
}

TEST(BatchNorm, EmptyBatchInTrainModeRejected) {
  Graph<float> g;
  Tensor<float> rm({1}), rv({1}, 1.0f);
  EXPECT_THROW(ops::batchnorm2d(g.constant(Tensor<float>({0, 1, 2, 2})), g.constant(Tensor<float>({1}, 1.0f)),
                                g.constant(Tensor<float>({1})), rm, rv),
               InvalidInputError);
}

TEST(Activations, Values) {
  Graph<float> g;
  auto s = ops::sigmoid(g.constant(Tensor<float>({1}, {0.0f})));
  EXPECT_EQ(s.value()[0], 0.5f);
  auto r = ops::relu(g.constant(Tensor<float>({3}, {-1, 0, 2})));
  EXPECT_EQ(r.value().vec(), (std::vector<float>{0, 0, 2}));
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  Graph<float> g;
  std::vector<int> labels{1};
  auto l = ops::softmax_cross_entropy(g.constant(Tensor<float>({1, 2})), std::span<const int>(labels));
  EXPECT_NEAR(l.value()[0], std::log(2.0), 1e-7);
}

TEST(SoftmaxCrossEntropy, MatchesDirectFormula) {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto z = random_tensor<double>(rng, {3, 4});
    Tensor<double> t({3, 4});
    for (int i = 0; i < 3; ++i) {
      double s = 0;
      for (int j = 0; j < 4; ++j) s += (t[i * 4 + j] = uniform01(rng));
      for (int j = 0; j < 4; ++j) t[i * 4 + j] /= s;
    }
    double expect = 0;
    for (int i = 0; i < 3; ++i) {
      double zsum = 0;
      for (int j = 0; j < 4; ++j) zsum += std::exp(z[i * 4 + j]);
      for (int j = 0; j < 4; ++j) expect -= t[i * 4 + j] * std::log(std::exp(z[i * 4 + j]) / zsum);
    }
    Graph<double> g;
    auto l = ops::softmax_cross_entropy(g.constant(z), t);
    EXPECT_NEAR(l.value()[0], expect / 3, 1e-6);
  }
}

TEST(SoftmaxCrossEntropy, RejectsUnnormalisedTarget) {
  Graph<float> g;
  EXPECT_THROW(ops::softmax_cross_entropy(g.constant(Tensor<float>({1, 2})), Tensor<float>({1, 2}, {0.5f, 0.6f})),
               InvalidInputError);
}

TEST(Backward, SumGivesOnes) {
  Graph<float> g;
  auto x = g.variable(Tensor<float>({2, 3}, 1.5f));
  g.backward(ops::sum(x));
  for (float v : x.grad()->data()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, SumOfSquares) {
  Graph<float> g;
  auto x = g.variable(Tensor<float>({2}, {1, -2}));
  g.backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(x.grad()->vec(), (std::vector<float>{2, -4}));
}

TEST(Backward, NonScalarIsUsageError) {
  Graph<float> g;
  auto x = g.variable(Tensor<float>({2}, {1, 2}));
  EXPECT_THROW(g.backward(ops::relu(x)), UsageError);
}

TEST(Backward, VisitsEachNodeOnce) {
  Graph<float> g;
  auto x = g.variable(Tensor<float>({2}, {1, 2}));
  auto y = ops::add(x, x);
  auto z = ops::mul(y, x);
  g.backward(ops::sum(z));
  EXPECT_EQ(g.last_backward_visits(), 3u);
  // d/dx sum(2x * x) = 4x
  EXPECT_EQ(x.grad()->vec(), (std::vector<float>{4, 8}));
}

TEST(Backward, AccumulationIsLinear) {
  Rng rng(21);
  Parameter<double> w("w", random_tensor<double>(rng, {3, 2}));
  auto x1 = random_tensor<double>(rng, {2, 3});
  auto x2 = random_tensor<double>(rng, {2, 3});
  {
    Graph<double> g1;
    g1.backward(ops::sum(ops::relu(ops::dense(g1.constant(x1), g1.parameter(w)))));
    Graph<double> g2;
    g2.backward(ops::sum(ops::sigmoid(ops::dense(g2.constant(x2), g2.parameter(w)))));
  }
  Tensor<double> separate = w.grad;
  w.zero_grad();
  Graph<double> g;
  auto a = ops::sum(ops::relu(ops::dense(g.constant(x1), g.parameter(w))));
  auto b = ops::sum(ops::sigmoid(ops::dense(g.constant(x2), g.parameter(w))));
  g.backward(ops::add(a, b));
  for (std::size_t i = 0; i < separate.size(); ++i) EXPECT_NEAR(separate[i], w.grad[i], 1e-12);
}

TEST(Backward, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng(99);
    Parameter<float> k("k", random_tensor<float>(rng, {4, 2, 3, 3}));
    auto x = random_tensor<float>(rng, {3, 2, 8, 8});
    Graph<float> g;
    auto y = ops::gap(ops::relu(ops::conv2d(g.constant(x), g.parameter(k), {1, 1, 1, 1})));
    std::vector<int> labels{0, 1, 3};
    g.backward(ops::softmax_cross_entropy(y, std::span<const int>(labels)));
    return k.grad;
  };
  EXPECT_EQ(run(), run());
}

TEST(GradCheck, EveryRegisteredOpPassesOverTenSeeds) {
  for (OpId op : registered_ops()) {
    for (std::uint64_t seed : {7u, 8u}) {
      auto report = gradient_check(op, 10, seed);
      EXPECT_TRUE(report.passed(1e-3)) << report.op << " max error " << report.max_error();
      EXPECT_FALSE(report.params.empty());
    }
  }
}

TEST(GradCheck, Conv2dSeed7) {
  auto report = gradient_check(OpId::conv2d, 10, 7);
  ASSERT_EQ(report.params.size(), 3u);
  for (const auto& p : report.params) EXPECT_LT(p.max_rel_error, 1e-3) << p.name;
}

TEST(GradCheck, FrozenParametersAreSkipped) {
  Rng rng(1);
  Parameter<double> x("x", random_tensor<double>(rng, {2, 3}));
  Parameter<double> w("w", random_tensor<double>(rng, {3, 2}), false);
  auto report = check_gradients("dense", {&x, &w}, [&](Graph<double>& g) {
    return ops::dense(g.parameter(x), g.parameter(w));
  });
  ASSERT_EQ(report.params.size(), 1u);
  EXPECT_EQ(report.params[0].name, "x");
  EXPECT_EQ(report.skipped, std::vector<std::string>{"w"});
  EXPECT_TRUE(report.passed());
}

TEST(GradCheck, FlagsCorruptedGradientRule) {
  Rng rng(1);
  Parameter<double> x("x", random_tensor<double>(rng, {2, 4}));
  // Square op whose backward forgets the factor 2.
  auto broken_square = [](Var<double> v) {
    Tensor<double> y = v.value();
    for (auto& e : y.data()) e *= e;
    Graph<double>* g = v.graph;
    return g->record(OpId::custom, std::move(y), {v}, [g, v](const Tensor<double>& dy, auto in) {
      for (std::size_t i = 0; i < dy.size(); ++i) (*in[0])[i] += dy[i] * g->value(v)[i];
    });
  };
  auto report = check_gradients("broken", {&x}, [&](Graph<double>& g) { return broken_square(g.parameter(x)); });
  EXPECT_GT(report.max_error(), 1e-1);
  EXPECT_FALSE(report.passed());
}
