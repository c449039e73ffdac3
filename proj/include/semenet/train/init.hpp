#pragma once

#include <cstdint>

#include "semenet/nn/model.hpp"

namespace semenet {

/// I.i.d. samples from U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
Tensor<T> he_uniform(const Shape& shape, std::size_t fan_in, Rng& rng);

double he_uniform_bound(std::size_t fan_in);

/// Model from a config with He-uniform weights drawn under `seed`.
template <typename T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace semenet
