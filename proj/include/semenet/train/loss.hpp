#pragma once

#include <span>

#include "semenet/tensor/ops.hpp"

namespace semenet {

/// lambda * CE(logits, y_a) + (1 - lambda) * CE(logits, y_b).
template <typename T>
Var<T> moex_loss(Var<T> logits, std::span<const int> y_a, std::span<const int> y_b, double lambda);

}  // namespace semenet
