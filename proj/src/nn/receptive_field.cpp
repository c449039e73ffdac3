#include "semenet/nn/receptive_field.hpp"

#include "semenet/error.hpp"

namespace semenet {

namespace {

void check(const RfLayer& l) {
  if (l.kernel < 1 || l.stride < 1) throw InvalidInputError("kernel and stride must be >= 1");
}

}  // namespace

std::vector<std::uint64_t> receptive_field(std::span<const RfLayer> chain) {
  std::vector<std::uint64_t> out;
  // rf - jump can go negative (1x1 kernels after strides), so use signed math.
  __int128 rf = 1, jump = 1;
  for (const auto& l : chain) {
    check(l);
    const __int128 k = l.kernel;
    rf = rf * k - (k - 1) * (rf - jump);
    jump *= l.stride;
    out.push_back(static_cast<std::uint64_t>(rf));
  }
  return out;
}

std::vector<std::uint64_t> receptive_field_classic(std::span<const RfLayer> chain) {
  std::vector<std::uint64_t> out;
  std::uint64_t rf = 1, jump = 1;
  for (const auto& l : chain) {
    check(l);
    rf += (l.kernel - 1) * jump;
    jump *= l.stride;
    out.push_back(rf);
  }
  return out;
}

}  // namespace semenet
