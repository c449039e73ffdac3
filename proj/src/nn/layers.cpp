#include "semenet/nn/layers.hpp"

#include <optional>
#include <set>

#include "semenet/error.hpp"
#include "semenet/tensor/ops.hpp"

namespace semenet {

using nlohmann::json;

template <typename T>
Parameter<T>& Layer<T>::add_param(const std::string& local, Shape shape, T fill, InitRole role,
                                  std::size_t fan_in, bool trainable) {
  auto& slot = slots_.emplace_back();
  slot.param = Parameter<T>(name_ + "." + local, Tensor<T>(std::move(shape), fill), trainable);
  slot.role = role;
  slot.fan_in = fan_in;
  return slot.param;
}

namespace {

// Typed access to a layer's params that rejects keys nobody asked for.
class Params {
 public:
  Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("parameters must be an object");
  }

  std::size_t count(const char* key, std::optional<std::size_t> fallback = std::nullopt) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (!fallback) fail(std::string("missing parameter '") + key + "'");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) fail(std::string("'") + key + "' must be a positive integer");
    return v.get<std::size_t>();
  }
  std::size_t natural(const char* key, std::size_t fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }
  double real(const char* key, double fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_number()) fail(std::string("'") + key + "' must be a number");
    return j_.at(key).get<double>();
  }
  bool flag(const char* key, bool fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(std::string("'") + key + "' must be a boolean");
    return j_.at(key).get<bool>();
  }
  std::string text(const char* key, const std::string& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) fail(std::string("'") + key + "' must be a string");
    return j_.at(key).get<std::string>();
  }
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) fail("unknown parameter '" + key + "'");
    }
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigurationError(where_ + ": " + msg); }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// ---- units shared by simple and composite layers ----

template <typename T>
struct ConvUnit {
  Parameter<T>* weight = nullptr;
  Parameter<T>* bias = nullptr;
  ops::Conv2dOptions opt;

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    return bias ? ops::conv2d(x, g.parameter(*weight), g.parameter(*bias), opt)
                : ops::conv2d(x, g.parameter(*weight), opt);
  }
};

template <typename T>
struct BnUnit {
  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;
  Parameter<T>* mean = nullptr;
  Parameter<T>* var = nullptr;
  ops::BatchNormOptions opt;

  Var<T> operator()(LayerContext<T>& ctx, Var<T> x) const {
    ops::BatchNormOptions o = opt;
    o.mode = ctx.training ? ops::BatchNormMode::train : ops::BatchNormMode::eval;
    return ops::batchnorm2d(x, ctx.graph.parameter(*gamma), ctx.graph.parameter(*beta), mean->value, var->value, o);
  }
};

template <typename T>
struct SeUnit {
  Parameter<T>* w1 = nullptr;  // [C, C/r]
  Parameter<T>* w2 = nullptr;  // [C/r, C]

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    Var<T> z = ops::gap(x);
    Var<T> s = ops::sigmoid(ops::dense(ops::relu(ops::dense(z, g.parameter(*w1))), g.parameter(*w2)));
    return ops::scale_channels(x, s);
  }
};

template <typename T>
ConvUnit<T> add_conv(Layer<T>& owner, const std::string& prefix, std::size_t in_c, std::size_t out_c, std::size_t k,
                     std::size_t stride, std::size_t pad, bool bias) {
  ConvUnit<T> u;
  u.opt = {stride, stride, pad, pad, ops::ConvAlgorithm::patch_matrix};
  u.weight = &owner.add_param(prefix + "weight", {out_c, in_c, k, k}, T{0}, InitRole::weight, in_c * k * k);
  if (bias) u.bias = &owner.add_param(prefix + "bias", {out_c}, T{0}, InitRole::fixed, 0);
  return u;
}

template <typename T>
BnUnit<T> add_bn(Layer<T>& owner, const std::string& prefix, std::size_t c, bool zero_gamma = false) {
  BnUnit<T> bn;
  bn.gamma = &owner.add_param(prefix + "gamma", {c}, zero_gamma ? T{0} : T{1}, InitRole::fixed, 0);
  bn.beta = &owner.add_param(prefix + "beta", {c}, T{0}, InitRole::fixed, 0);
  bn.mean = &owner.add_param(prefix + "running_mean", {c}, T{0}, InitRole::fixed, 0, false);
  bn.var = &owner.add_param(prefix + "running_var", {c}, T{1}, InitRole::fixed, 0, false);
  return bn;
}

template <typename T>
SeUnit<T> add_se(Layer<T>& owner, const std::string& prefix, std::size_t c, std::size_t r, const Params& p) {
  if (c % r != 0) {
    p.fail("SE reduction " + std::to_string(r) + " does not divide " + std::to_string(c) + " channels");
  }
  SeUnit<T> se;
  se.w1 = &owner.add_param(prefix + "w1", {c, c / r}, T{0}, InitRole::weight, c);
  se.w2 = &owner.add_param(prefix + "w2", {c / r, c}, T{0}, InitRole::weight, c / r);
  return se;
}

std::size_t window_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad, const Params& p) {
  if (in + 2 * pad < k) p.fail("window " + std::to_string(k) + " larger than padded input " + std::to_string(in));
  return (in + 2 * pad - k) / stride + 1;
}

void require_map(const Shape& s, const Params& p) {
  if (s.size() != 3) p.fail("expects a feature map [C,H,W], got " + shape_str(s));
}

// ---- layers ----

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("conv", name) {
    require_map(in, p);
    const std::size_t f = p.count("out"), k = p.count("k", 3), stride = p.count("stride", 1);
    const std::size_t pad = p.natural("pad", (k - 1) / 2);
    conv_ = add_conv(*this, "", in[0], f, k, stride, pad, p.flag("bias", false));
    out = {f, window_out(in[1], k, stride, pad, p), window_out(in[2], k, stride, pad, p)};
  }
  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override { return conv_(ctx.graph, x); }

 private:
  ConvUnit<T> conv_;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("batchnorm", name) {
    require_map(in, p);
    bn_ = add_bn(*this, "", in[0], p.flag("zero_gamma", false));
    bn_.opt.eps = p.real("eps", 1e-5);
    bn_.opt.momentum = p.real("momentum", 0.1);
    if (!(bn_.opt.eps > 0)) p.fail("'eps' must be > 0");
    if (!(bn_.opt.momentum >= 0 && bn_.opt.momentum <= 1)) p.fail("'momentum' must lie in [0, 1]");
    out = in;
  }
  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override { return bn_(ctx, x); }

 private:
  BnUnit<T> bn_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  ReluLayer(const std::string& name, const Shape& in, Shape& out) : Layer<T>("relu", name) { out = in; }
  Var<T> forward(LayerContext<T>&, Var<T> x, std::span<const Var<T>>) override { return ops::relu(x); }
};

template <typename T>
class PoolLayer final : public Layer<T> {
 public:
  PoolLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("pool", name) {
    require_map(in, p);
    const std::string mode = p.text("mode", "max");
    if (mode != "max" && mode != "avg") p.fail("'mode' must be 'max' or 'avg'");
    max_ = mode == "max";
    k_ = p.count("k", 2);
    stride_ = p.count("stride", k_);
    out = {in[0], window_out(in[1], k_, stride_, 0, p), window_out(in[2], k_, stride_, 0, p)};
  }
  Var<T> forward(LayerContext<T>&, Var<T> x, std::span<const Var<T>>) override {
    return max_ ? ops::max_pool2d(x, k_, stride_) : ops::avg_pool2d(x, k_, stride_);
  }

 private:
  bool max_ = true;
  std::size_t k_ = 2, stride_ = 2;
};

template <typename T>
class GapLayer final : public Layer<T> {
 public:
  GapLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("gap", name) {
    require_map(in, p);
    out = {in[0]};
  }
  Var<T> forward(LayerContext<T>&, Var<T> x, std::span<const Var<T>>) override { return ops::gap(x); }
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const std::string& name, Params& p, const Shape& in, std::size_t classes, Shape& out)
      : Layer<T>("dense", name) {
    const std::size_t d = shape_size(in), k = p.count("out", classes);
    weight_ = &this->add_param("weight", {d, k}, T{0}, InitRole::weight, d);
    if (p.flag("bias", true)) bias_ = &this->add_param("bias", {k}, T{0}, InitRole::fixed, 0);
    out = {k};
  }
  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override {
    Graph<T>& g = ctx.graph;
    return bias_ ? ops::dense(x, g.parameter(*weight_), g.parameter(*bias_)) : ops::dense(x, g.parameter(*weight_));
  }

 private:
  Parameter<T>* weight_ = nullptr;
  Parameter<T>* bias_ = nullptr;
};

template <typename T>
class SeLayer final : public Layer<T> {
 public:
  SeLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("se_block", name) {
    require_map(in, p);
    se_ = add_se(*this, "", in[0], p.count("r", 16), p);
    out = in;
  }
  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override { return se_(ctx.graph, x); }

 private:
  SeUnit<T> se_;
};

template <typename T>
class MoexLayer final : public Layer<T> {
 public:
  MoexLayer(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("moex", name) {
    require_map(in, p);
    const std::string norm = p.text("norm", "positional");
    if (norm == "positional") {
      spec_.norm = ops::MomentNorm::positional;
    } else if (norm == "instance") {
      spec_.norm = ops::MomentNorm::instance;
    } else {
      p.fail("'norm' must be 'positional' or 'instance'");
    }
    spec_.lambda = p.real("lambda", spec_.lambda);
    spec_.probability = p.real("p", spec_.probability);
    spec_.alpha = p.real("alpha", spec_.alpha);
    spec_.eps = p.real("eps", spec_.eps);
    try {
      spec_.validate();
    } catch (const ConfigurationError& e) {
      p.fail(e.what());
    }
    out = in;
  }
  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override {
    if (ctx.moex_partner.empty()) return x;
    return ops::moex_exchange(x, ctx.moex_partner, spec_.norm, static_cast<T>(spec_.eps));
  }
  const MoexSpec& spec() const { return spec_; }

 private:
  MoexSpec spec_;
};

// conv3x3(stride)-BN-ReLU-conv3x3-BN[-SE] plus shortcut, then ReLU.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("residual_block", name) {
    require_map(in, p);
    const std::size_t f = p.count("out", in[0]), stride = p.count("stride", 1);
    const bool se = p.flag("se", false);
    const std::size_t r = p.count("r", 16);
    const bool zero_last = p.flag("zero_init_last_bn", false);
    conv1_ = add_conv(*this, "conv1.", in[0], f, 3, stride, 1, false);
    bn1_ = add_bn(*this, "bn1.", f);
    conv2_ = add_conv(*this, "conv2.", f, f, 3, 1, 1, false);
    bn2_ = add_bn(*this, "bn2.", f, zero_last);
    if (se) se_ = add_se(*this, "se.", f, r, p);
    if (stride != 1 || f != in[0]) {
      shortcut_ = add_conv(*this, "shortcut.", in[0], f, 1, stride, 0, false);
      shortcut_bn_ = add_bn(*this, "shortcut_bn.", f);
    }
    out = {f, window_out(in[1], 3, stride, 1, p), window_out(in[2], 3, stride, 1, p)};
  }

  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override {
    Graph<T>& g = ctx.graph;
    Var<T> y = ops::relu(bn1_(ctx, conv1_(g, x)));
    y = bn2_(ctx, conv2_(g, y));
    if (se_) y = (*se_)(g, y);
    Var<T> sc = shortcut_ ? shortcut_bn_(ctx, (*shortcut_)(g, x)) : x;
    return ops::relu(ops::add(y, sc));
  }

 private:
  ConvUnit<T> conv1_, conv2_;
  BnUnit<T> bn1_, bn2_, shortcut_bn_;
  std::optional<SeUnit<T>> se_;
  std::optional<ConvUnit<T>> shortcut_;
};

// `layers` x (BN-ReLU-conv3x3(growth), concatenated), then the transition
// BN-ReLU-conv1x1(out)[-avgpool2][-SE].
template <typename T>
class DenseBlock final : public Layer<T> {
 public:
  DenseBlock(const std::string& name, Params& p, const Shape& in, Shape& out) : Layer<T>("dense_block", name) {
    require_map(in, p);
    const std::size_t growth = p.count("growth", 8), n = p.count("layers", 2);
    const std::size_t f = p.count("out");
    pool_ = p.flag("pool", true);
    const bool se = p.flag("se", false);
    const std::size_t r = p.count("r", 16);
    std::size_t c = in[0];
    for (std::size_t i = 0; i < n; ++i) {
      const std::string pre = "layer" + std::to_string(i) + ".";
      bns_.push_back(add_bn(*this, pre + "bn.", c));
      convs_.push_back(add_conv(*this, pre + "conv.", c, growth, 3, 1, 1, false));
      c += growth;
    }
    trans_bn_ = add_bn(*this, "transition.bn.", c);
    trans_conv_ = add_conv(*this, "transition.conv.", c, f, 1, 1, 0, false);
    if (se) se_ = add_se(*this, "se.", f, r, p);
    out = {f, in[1], in[2]};
    if (pool_) out = {f, window_out(in[1], 2, 2, 0, p), window_out(in[2], 2, 2, 0, p)};
  }

  Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>>) override {
    Graph<T>& g = ctx.graph;
    Var<T> feat = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      feat = ops::concat_channels(feat, convs_[i](g, ops::relu(bns_[i](ctx, feat))));
    }
    Var<T> y = trans_conv_(g, ops::relu(trans_bn_(ctx, feat)));
    if (pool_) y = ops::avg_pool2d(y, 2, 2);
    if (se_) y = (*se_)(g, y);
    return y;
  }

 private:
  std::vector<BnUnit<T>> bns_;
  std::vector<ConvUnit<T>> convs_;
  BnUnit<T> trans_bn_;
  ConvUnit<T> trans_conv_;
  std::optional<SeUnit<T>> se_;
  bool pool_ = true;
};

template <typename T>
class UpsampleConcat final : public Layer<T> {
 public:
  UpsampleConcat(const std::string& name, Params& p, const std::vector<Shape>& in, Shape& out)
      : Layer<T>("upsample_concat", name) {
    require_map(in[0], p);
    if (in.size() != 2) p.fail("needs exactly one skip input in 'inputs'");
    require_map(in[1], p);
    factor_ = p.count("factor", 2);
    if (in[0][1] * factor_ != in[1][1] || in[0][2] * factor_ != in[1][2]) {
      p.fail("upsampled " + shape_str(in[0]) + " x" + std::to_string(factor_) + " does not match skip " +
             shape_str(in[1]));
    }
    out = {in[0][0] + in[1][0], in[1][1], in[1][2]};
  }
  Var<T> forward(LayerContext<T>&, Var<T> x, std::span<const Var<T>> extra) override {
    return ops::concat_channels(ops::upsample_nearest2d(x, factor_), extra[0]);
  }

 private:
  std::size_t factor_ = 2;
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const std::string& name,
                                     const std::vector<Shape>& in_shapes, std::size_t classes, LayerBuild& build) {
  Params p(spec.params, "layer '" + name + "' (" + spec.kind + ")");
  if (spec.kind != "upsample_concat" && !spec.inputs.empty()) p.fail("'inputs' is only valid for upsample_concat");
  const Shape& in = in_shapes.at(0);
  std::unique_ptr<Layer<T>> layer;
  Shape& out = build.out_shape;
  if (spec.kind == "conv") {
    layer = std::make_unique<ConvLayer<T>>(name, p, in, out);
  } else if (spec.kind == "batchnorm") {
    layer = std::make_unique<BatchNormLayer<T>>(name, p, in, out);
  } else if (spec.kind == "relu") {
    layer = std::make_unique<ReluLayer<T>>(name, in, out);
  } else if (spec.kind == "pool") {
    layer = std::make_unique<PoolLayer<T>>(name, p, in, out);
  } else if (spec.kind == "gap") {
    layer = std::make_unique<GapLayer<T>>(name, p, in, out);
  } else if (spec.kind == "dense") {
    layer = std::make_unique<DenseLayer<T>>(name, p, in, classes, out);
  } else if (spec.kind == "se_block") {
    layer = std::make_unique<SeLayer<T>>(name, p, in, out);
  } else if (spec.kind == "moex") {
    layer = std::make_unique<MoexLayer<T>>(name, p, in, out);
  } else if (spec.kind == "residual_block") {
    layer = std::make_unique<ResidualBlock<T>>(name, p, in, out);
  } else if (spec.kind == "dense_block") {
    layer = std::make_unique<DenseBlock<T>>(name, p, in, out);
  } else if (spec.kind == "upsample_concat") {
    layer = std::make_unique<UpsampleConcat<T>>(name, p, in_shapes, out);
  } else {
    throw ConfigurationError("layer '" + name + "': unknown kind '" + spec.kind + "'");
  }
  p.finish();
  return layer;
}

template <typename T>
const MoexSpec* moex_spec_of(const Layer<T>& layer) {
  const auto* m = dynamic_cast<const MoexLayer<T>*>(&layer);
  return m ? &m->spec() : nullptr;
}

template class Layer<float>;
template class Layer<double>;
template std::unique_ptr<Layer<float>> make_layer(const LayerSpec&, const std::string&, const std::vector<Shape>&,
                                                  std::size_t, LayerBuild&);
template std::unique_ptr<Layer<double>> make_layer(const LayerSpec&, const std::string&, const std::vector<Shape>&,
                                                   std::size_t, LayerBuild&);
template const MoexSpec* moex_spec_of(const Layer<float>&);
template const MoexSpec* moex_spec_of(const Layer<double>&);

}  // namespace semenet
