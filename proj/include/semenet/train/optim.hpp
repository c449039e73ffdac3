#pragma once

#include <cstdint>
#include <vector>

#include "semenet/tensor/tensor.hpp"

namespace semenet {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 1e-4;  // base rate; schedules scale from here
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Per-parameter buffers: SGD keeps the velocity in `first`; Adam keeps
/// the first and second moments.
template <typename T>
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first;
  std::vector<Tensor<T>> second;
};

/// SGD with heavy-ball momentum (v = mu v + g; p -= lr v) or Adam with
/// bias correction. Only trainable parameters are passed in.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::vector<Parameter<T>*> params);

  /// Applies one update at learning rate `lr`. A non-finite gradient
  /// aborts with a TrainingError naming the parameter; nothing is updated.
  void step(double lr);

  const OptimizerConfig& config() const noexcept { return cfg_; }
  OptimizerState<T>& state() noexcept { return state_; }
  const OptimizerState<T>& state() const noexcept { return state_; }
  const std::vector<Parameter<T>*>& params() const noexcept { return params_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Parameter<T>*> params_;
  OptimizerState<T> state_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace semenet
