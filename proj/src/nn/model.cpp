#include "semenet/nn/model.hpp"

#include <algorithm>
#include <map>

#include "semenet/error.hpp"

namespace semenet {

template <typename T>
Model<T>::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.layers.empty()) throw ConfigurationError("model '" + cfg_.name + "' has no layers");
  if (std::any_of(cfg_.input.begin(), cfg_.input.end(), [](std::size_t d) { return d == 0; })) {
    throw ConfigurationError("input extents must be positive");
  }
  if (cfg_.classes == 0) throw ConfigurationError("classes must be >= 1");
  if (cfg_.task == Task::classify && cfg_.classes < 2) throw ConfigurationError("a classifier needs >= 2 classes");

  std::map<std::string, std::size_t> by_name;
  Shape current{cfg_.input[0], cfg_.input[1], cfg_.input[2]};
  std::size_t dense_count = 0;
  for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
    const LayerSpec& spec = cfg_.layers[i];
    const std::string name = spec.name.empty() ? spec.kind + std::to_string(i) : spec.name;
    if (by_name.count(name)) throw ConfigurationError("layer " + std::to_string(i) + ": duplicate name '" + name + "'");
    std::vector<Shape> in_shapes{current};
    std::vector<std::size_t> extra;
    for (const auto& ref : spec.inputs) {
      auto it = by_name.find(ref);
      if (it == by_name.end()) {
        throw ConfigurationError("layer " + std::to_string(i) + " '" + name + "': unknown input '" + ref + "'");
      }
      extra.push_back(it->second);
      in_shapes.push_back(shapes_[it->second]);
    }
    LayerBuild build;
    try {
      layers_.push_back(make_layer<T>(spec, name, in_shapes, cfg_.classes, build));
    } catch (const ConfigurationError& e) {
      throw ConfigurationError("layer " + std::to_string(i) + " " + e.what());
    }
    if (spec.kind == "dense") ++dense_count;
    by_name[name] = i;
    shapes_.push_back(build.out_shape);
    extra_inputs_.push_back(std::move(extra));
    current = build.out_shape;
  }

  if (cfg_.task == Task::classify) {
    if (dense_count != 1 || cfg_.layers.back().kind != "dense") {
      throw ConfigurationError("a classifier needs exactly one dense head, placed last");
    }
    if (current != Shape{cfg_.classes}) {
      throw ConfigurationError("head produces " + shape_str(current) + " but the config has " +
                               std::to_string(cfg_.classes) + " classes");
    }
  } else {
    const Shape expect{cfg_.classes, cfg_.input[1], cfg_.input[2]};
    if (current != expect) {
      throw ConfigurationError("segmentation output " + shape_str(current) + " must be " + shape_str(expect));
    }
  }
}

template <typename T>
std::size_t Model<T>::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i]->name() == name) return i;
  throw UsageError("model has no layer named '" + name + "'");
}

template <typename T>
void Model<T>::initialize(const WeightInit<T>& init, std::uint64_t seed) {
  std::uint64_t index = 0;
  for (auto& layer : layers_) {
    for (auto& slot : layer->slots()) {
      if (slot.role == InitRole::weight) {
        Rng rng = make_rng(seed, {0x1a17, index});
        Tensor<T> v = init(slot.param.value.shape(), slot.fan_in, rng);
        if (v.shape() != slot.param.value.shape()) throw UsageError("initialiser returned a wrong shape");
        slot.param.value = std::move(v);
      }
      ++index;
    }
  }
}

template <typename T>
Var<T> Model<T>::forward(Graph<T>& g, Var<T> x, const ForwardOptions<T>& opt) {
  const Shape& xs = x.shape();
  if (xs.size() != 4 || xs[1] != cfg_.input[0]) {
    throw InvalidInputError("model '" + cfg_.name + "' expects [N," + std::to_string(cfg_.input[0]) +
                            ",H,W] input, got " + shape_str(xs));
  }
  LayerContext<T> ctx{g, opt.training, opt.moex_partner};
  std::vector<Var<T>> outs;
  outs.reserve(layers_.size());
  Var<T> cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::vector<Var<T>> extra;
    for (std::size_t j : extra_inputs_[i]) extra.push_back(outs[j]);
    cur = layers_[i]->forward(ctx, cur, extra);
    if (opt.tap) opt.tap(layers_[i]->name(), cur);
    outs.push_back(cur);
  }
  return cur;
}

template <typename T>
Tensor<T> Model<T>::predict(const Tensor<T>& x) {
  Graph<T> g;
  return forward(g, g.constant(x)).value();
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers_)
    for (auto& slot : layer->slots()) out.push_back(&slot.param);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Model<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& layer : layers_)
    for (const auto& slot : layer->slots()) out.push_back(&slot.param);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::trainable_parameters() {
  std::vector<Parameter<T>*> out;
  for (auto* p : parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

template <typename T>
std::size_t Model<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters())
    if (p->trainable) n += p->value.size();
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
const MoexSpec* Model<T>::moex() const {
  for (const auto& layer : layers_)
    if (const MoexSpec* s = moex_spec_of(*layer)) return s;
  return nullptr;
}

template <typename T>
std::string Model<T>::default_cam_layer() const {
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i]->kind() == "gap") return layers_[i - 1]->name();
  }
  // No pooling head: the last layer producing a feature map.
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (shapes_[i].size() == 3) return layers_[i]->name();
  }
  throw UsageError("model has no convolutional feature map");
}

template class Model<float>;
template class Model<double>;

}  // namespace semenet
