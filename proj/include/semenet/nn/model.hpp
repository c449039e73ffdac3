#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semenet/nn/layers.hpp"
#include "semenet/nn/model_config.hpp"
#include "semenet/rng.hpp"

namespace semenet {

/// Fills a weight tensor of the given shape and fan-in.
template <typename T>
using WeightInit = std::function<Tensor<T>(const Shape& shape, std::size_t fan_in, Rng& rng)>;

template <typename T>
struct ForwardOptions {
  bool training = false;
  /// Partner permutation for the moex layer; empty runs it as identity.
  std::span<const std::size_t> moex_partner{};
  /// Called with each layer's output right after it is recorded. The
  /// callback may rewrite the value through Graph::mutable_value.
  std::function<void(const std::string& layer, Var<T> out)> tap;
};

/// A network assembled from a ModelConfig. Parameters live inside the
/// model; every forward pass records onto a caller-owned graph, so the
/// model itself is only mutated by optimisers and batch-norm statistics.
template <typename T>
class Model {
 public:
  /// Validates the config and infers every layer's shape. Weights start
  /// at zero until initialize() is called.
  explicit Model(ModelConfig cfg);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return cfg_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const std::string& layer_name(std::size_t i) const { return layers_.at(i)->name(); }
  const std::string& layer_kind(std::size_t i) const { return layers_.at(i)->kind(); }
  /// Batch-free output shape of each layer.
  const Shape& layer_shape(std::size_t i) const { return shapes_.at(i); }
  std::size_t layer_index(const std::string& name) const;

  /// Draws every weight from `init` with an RNG stream keyed by
  /// (seed, parameter index).
  void initialize(const WeightInit<T>& init, std::uint64_t seed);

  /// Runs x[N,C,H,W] through the layers and returns the final output.
  Var<T> forward(Graph<T>& g, Var<T> x, const ForwardOptions<T>& opt = {});
  /// Eval-mode forward without keeping the graph.
  Tensor<T> predict(const Tensor<T>& x);

  /// All parameters and buffers in a fixed order.
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::vector<Parameter<T>*> trainable_parameters();
  std::size_t trainable_count() const;
  void zero_grad();

  /// Settings of the first moex layer, if any.
  const MoexSpec* moex() const;
  /// Name of the feature map feeding the global-average-pooling layer (the
  /// last conv stage), or of the layer before the head when there is none.
  std::string default_cam_layer() const;

  /// Same architecture and parameter values at another precision.
  template <typename U>
  Model<U> cast() const {
    Model<U> out(cfg_);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
    return out;
  }
  Model clone() const { return cast<T>(); }

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<std::size_t>> extra_inputs_;  // indices of named inputs
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace semenet
