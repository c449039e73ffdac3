#include "semenet/tensor/graph.hpp"

#include <cmath>
#include <string>

#include "semenet/error.hpp"

namespace semenet {

std::string_view op_name(OpId op) {
  switch (op) {
    case OpId::leaf: return "leaf";
    case OpId::conv2d: return "conv2d";
    case OpId::dense: return "dense";
    case OpId::batchnorm2d: return "batchnorm2d";
    case OpId::relu: return "relu";
    case OpId::sigmoid: return "sigmoid";
    case OpId::softmax_cross_entropy: return "softmax_cross_entropy";
    case OpId::sigmoid_bce: return "sigmoid_bce";
    case OpId::gap: return "gap";
    case OpId::add: return "add";
    case OpId::mul: return "mul";
    case OpId::scale: return "scale";
    case OpId::sum: return "sum";
    case OpId::concat_channels: return "concat_channels";
    case OpId::scale_channels: return "scale_channels";
    case OpId::max_pool2d: return "max_pool2d";
    case OpId::avg_pool2d: return "avg_pool2d";
    case OpId::upsample_nearest2d: return "upsample_nearest2d";
    case OpId::moex_exchange: return "moex_exchange";
    case OpId::custom: return "custom";
  }
  return "unknown";
}

template <typename T>
Var<T> Graph<T>::push(Node node) {
#ifndef NDEBUG
  const Tensor<T>& v = node.param ? node.param->value : node.value;
  for (T x : v.data()) {
    if (!std::isfinite(x)) {
      throw TrainingError("non-finite value produced by " + std::string(op_name(node.op)));
    }
  }
#endif
  nodes_.push_back(std::move(node));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::variable(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::parameter(Parameter<T>& p) {
  Node n;
  n.param = &p;
  n.requires_grad = p.requires_grad;
  return push(std::move(n));
}

template <typename T>
Var<T> Graph<T>::record(OpId op, Tensor<T> value, std::vector<Var<T>> inputs, BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.graph != this) throw UsageError("input belongs to a different graph");
    n.inputs.push_back(in.index);
    n.requires_grad = n.requires_grad || nodes_[in.index].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var<T> v) const {
  const Node& n = nodes_.at(v.index);
  return n.param ? n.param->value : n.value;
}

template <typename T>
Tensor<T>& Graph<T>::mutable_value(Var<T> v) {
  Node& n = nodes_.at(v.index);
  if (n.param) throw UsageError("parameter leaves are read-only");
  return n.value;
}

template <typename T>
const Tensor<T>* Graph<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.index);
  if (n.param) return &n.param->grad;
  if (!n.requires_grad || n.grad.empty()) return nullptr;
  return &n.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
  if (loss.graph != this) throw UsageError("loss belongs to a different graph");
  Node& root = nodes_.at(loss.index);
  if (value(loss).size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_str(value(loss).shape()));
  }
  if (!root.requires_grad) throw UsageError("loss does not depend on any differentiable input");

  for (auto& n : nodes_) n.grad = Tensor<T>();
  visits_ = 0;
  root.grad = Tensor<T>(value(loss).shape(), T{1});

  std::vector<Tensor<T>*> slots;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      auto dst = n.param->grad.data();
      if (n.param->grad.shape() != n.param->value.shape()) {
        n.param->grad = Tensor<T>(n.param->value.shape());
        dst = n.param->grad.data();
      }
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      continue;
    }
    if (!n.backward) continue;
    slots.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      Node& in = nodes_[n.inputs[k]];
      if (!in.requires_grad) continue;
      if (in.grad.empty()) in.grad = Tensor<T>(value(Var<T>{this, n.inputs[k]}).shape());
      slots[k] = &in.grad;
    }
    n.backward(n.grad, slots);
    ++visits_;
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace semenet
