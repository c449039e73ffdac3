#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace semenet {

struct RfLayer {
  std::uint64_t kernel = 1;
  std::uint64_t stride = 1;
};

/// Receptive field after each layer of a chain, rf_0 = 1, evaluated as
/// rf_n = rf_{n-1} k_n - (k_n - 1)(rf_{n-1} - prod_{i<n} s_i).
std::vector<std::uint64_t> receptive_field(std::span<const RfLayer> chain);

/// The textbook recursion rf_n = rf_{n-1} + (k_n - 1) prod_{i<n} s_i.
std::vector<std::uint64_t> receptive_field_classic(std::span<const RfLayer> chain);

}  // namespace semenet
