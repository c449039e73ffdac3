#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace semenet {

enum class KMeansInit { plus_plus, random };

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  KMeansInit init = KMeansInit::plus_plus;
};

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm. Ties go to the lowest centroid index and an empty
/// cluster keeps its previous centroid, so the objective never increases.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt);

}  // namespace semenet
