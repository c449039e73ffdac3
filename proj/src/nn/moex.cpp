#include "semenet/nn/moex.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "semenet/error.hpp"

namespace semenet {

void MoexSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigurationError("moex lambda must lie in [0, 1]");
  if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigurationError("moex probability must lie in [0, 1]");
  if (!(alpha >= 0.0)) throw ConfigurationError("moex alpha must be >= 0");
  if (!(eps > 0.0)) throw ConfigurationError("moex eps must be > 0");
}

std::vector<std::size_t> moex_partners(std::span<const int> labels, Rng& rng) {
  const std::size_t n = labels.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  if (n < 2) return perm;

  auto bad = [&](std::size_t i) { return perm[i] == i || labels[perm[i]] == labels[i]; };
  auto self_free = [&](std::size_t i) { return perm[i] != i; };
  // Greedy repair: swapping the partners of i and j fixes i when both
  // end up cross-class (or at least not self-paired).
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      if (pass == 0 ? !bad(i) : self_free(i)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        std::swap(perm[i], perm[j]);
        const bool improved = pass == 0 ? (!bad(i) && !bad(j)) : (self_free(i) && self_free(j));
        if (improved) break;
        std::swap(perm[i], perm[j]);
      }
    }
  }
  return perm;
}

double sample_lambda(const MoexSpec& spec, Rng& rng) {
  if (spec.alpha <= 0.0) return spec.lambda;
  std::gamma_distribution<double> gamma(spec.alpha, 1.0);
  const double a = gamma(rng), b = gamma(rng);
  return a + b > 0 ? a / (a + b) : 0.5;
}

}  // namespace semenet
