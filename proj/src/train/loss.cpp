#include "semenet/train/loss.hpp"

#include "semenet/error.hpp"

namespace semenet {

template <typename T>
Var<T> moex_loss(Var<T> logits, std::span<const int> y_a, std::span<const int> y_b, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigurationError("moex lambda must lie in [0, 1]");
  Var<T> a = ops::softmax_cross_entropy(logits, y_a);
  if (lambda == 1.0) return a;
  Var<T> b = ops::softmax_cross_entropy(logits, y_b);
  if (lambda == 0.0) return b;
  return ops::add(ops::scale(a, static_cast<T>(lambda)), ops::scale(b, static_cast<T>(1.0 - lambda)));
}

template Var<float> moex_loss(Var<float>, std::span<const int>, std::span<const int>, double);
template Var<double> moex_loss(Var<double>, std::span<const int>, std::span<const int>, double);

}  // namespace semenet
