#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semenet/nn/model_config.hpp"
#include "semenet/nn/moex.hpp"
#include "semenet/tensor/graph.hpp"

namespace semenet {

/// How a parameter is filled by Model::initialize.
enum class InitRole {
  weight,  ///< drawn from the weight initialiser with the recorded fan-in
  fixed,   ///< keeps its construction value (biases, BN affine terms, buffers)
};

template <typename T>
struct ParamSlot {
  Parameter<T> param;
  InitRole role = InitRole::fixed;
  std::size_t fan_in = 0;
};

template <typename T>
struct LayerContext {
  Graph<T>& graph;
  bool training = false;
  /// MoEx partner permutation for the current batch; empty disables the
  /// exchange.
  std::span<const std::size_t> moex_partner{};
};

/// A node of the model's layer list. Composite blocks (residual, dense)
/// own the parameters of all their sub-layers.
template <typename T>
class Layer {
 public:
  Layer(std::string kind, std::string name) : kind_(std::move(kind)), name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

  /// `extra` carries the outputs named in LayerSpec::inputs.
  virtual Var<T> forward(LayerContext<T>& ctx, Var<T> x, std::span<const Var<T>> extra) = 0;

  std::deque<ParamSlot<T>>& slots() noexcept { return slots_; }

  /// Registers a parameter named "<layer>.<local>".
  Parameter<T>& add_param(const std::string& local, Shape shape, T fill, InitRole role, std::size_t fan_in,
                          bool trainable = true);

 private:
  std::string kind_;
  std::string name_;
  std::deque<ParamSlot<T>> slots_;  // stable addresses
};

struct LayerBuild {
  Shape out_shape;  // without the batch axis: [C,H,W] or [D]
};

/// Instantiates `spec` for inputs of the given (batch-free) shapes.
/// Throws ConfigurationError for missing, invalid or unknown parameters
/// and for shape mismatches.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const std::string& name,
                                     const std::vector<Shape>& in_shapes, std::size_t classes, LayerBuild& build);

/// MoEx settings of a moex layer; null for other kinds.
template <typename T>
const MoexSpec* moex_spec_of(const Layer<T>& layer);

}  // namespace semenet
