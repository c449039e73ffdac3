#include "semenet/train/init.hpp"

#include <cmath>

#include "semenet/error.hpp"

namespace semenet {

double he_uniform_bound(std::size_t fan_in) {
  if (fan_in < 1) throw InvalidInputError("fan_in must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

template <typename T>
Tensor<T> he_uniform(const Shape& shape, std::size_t fan_in, Rng& rng) {
  const double bound = he_uniform_bound(fan_in);
  Tensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(uniform(rng, -bound, bound));
  return out;
}

template <typename T>
Model<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model<T> model(cfg);
  model.initialize(he_uniform<T>, seed);
  return model;
}

template Tensor<float> he_uniform(const Shape&, std::size_t, Rng&);
template Tensor<double> he_uniform(const Shape&, std::size_t, Rng&);
template Model<float> build_model(const ModelConfig&, std::uint64_t);
template Model<double> build_model(const ModelConfig&, std::uint64_t);

}  // namespace semenet
