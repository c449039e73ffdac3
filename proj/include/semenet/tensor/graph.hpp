#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "semenet/tensor/tensor.hpp"

namespace semenet {

enum class OpId {
  leaf,
  conv2d,
  dense,
  batchnorm2d,
  relu,
  sigmoid,
  softmax_cross_entropy,
  sigmoid_bce,
  gap,
  add,
  mul,
  scale,
  sum,
  concat_channels,
  scale_channels,
  max_pool2d,
  avg_pool2d,
  upsample_nearest2d,
  moex_exchange,
  custom,
};

std::string_view op_name(OpId op);

template <typename T>
class Graph;

/// Handle to a node of a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t index = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient after Graph::backward; null when the node does not need one.
  const Tensor<T>* grad() const;
};

/// Append-only tape of recorded operations. Nodes are stored in
/// topological order by construction, so backward is a reverse sweep.
/// A graph is confined to one thread at a time.
template <typename T>
class Graph {
 public:
  /// Receives the output gradient and one slot per input; slots are null
  /// for inputs that do not require gradients. Implementations accumulate.
  using BackwardFn =
      std::function<void(const Tensor<T>& out_grad, std::span<Tensor<T>* const> in_grads)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> variable(Tensor<T> value);
  /// Leaf bound to a model parameter. backward() adds into p.grad.
  Var<T> parameter(Parameter<T>& p);

  Var<T> record(OpId op, Tensor<T> value, std::vector<Var<T>> inputs, BackwardFn backward);

  const Tensor<T>& value(Var<T> v) const;
  /// Writable access to a node value; used by forward taps before
  /// downstream nodes are recorded.
  Tensor<T>& mutable_value(Var<T> v);
  const Tensor<T>* grad(Var<T> v) const;
  bool requires_grad(Var<T> v) const { return nodes_.at(v.index).requires_grad; }
  OpId op(Var<T> v) const { return nodes_.at(v.index).op; }

  /// Reverse-mode sweep seeded with d(loss)/d(loss) = 1. The loss must be
  /// a single-element node.
  void backward(Var<T> loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of backward closures run by the last backward() call.
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    OpId op = OpId::leaf;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph->value(*this);
}

template <typename T>
const Tensor<T>* Var<T>::grad() const {
  return graph->grad(*this);
}

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace semenet
