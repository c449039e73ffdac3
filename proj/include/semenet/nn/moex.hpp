#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semenet/rng.hpp"
#include "semenet/tensor/ops.hpp"

namespace semenet {

/// Settings of a moex layer. `alpha` > 0 draws lambda ~ Beta(alpha, alpha)
/// per batch instead of using the fixed value.
struct MoexSpec {
  ops::MomentNorm norm = ops::MomentNorm::positional;
  double lambda = 0.9;
  double probability = 0.5;
  double alpha = 0.0;
  double eps = 1e-5;

  void validate() const;
};

/// Same-batch partner permutation. Starts from a uniform shuffle and then
/// swaps partners so that as many samples as possible are paired with a
/// different class. Nobody is paired with itself when the batch has >= 2
/// samples.
std::vector<std::size_t> moex_partners(std::span<const int> labels, Rng& rng);

double sample_lambda(const MoexSpec& spec, Rng& rng);

}  // namespace semenet
