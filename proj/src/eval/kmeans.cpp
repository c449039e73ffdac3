#include "semenet/eval/kmeans.hpp"

#include <limits>

#include "semenet/error.hpp"
#include "semenet/rng.hpp"

namespace semenet {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> seed_centroids(const std::vector<std::vector<double>>& pts, const KMeansOptions& opt) {
  Rng rng = make_rng(opt.seed, {0x6b6d});
  std::vector<std::vector<double>> c;
  if (opt.init == KMeansInit::random) {
    // k distinct indices by partial Fisher-Yates.
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < opt.k; ++i) {
      std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
      c.push_back(pts[idx[i]]);
    }
    return c;
  }
  c.push_back(pts[uniform_index(rng, pts.size())]);
  std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
  while (c.size() < opt.k) {
    double total = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts[i], c.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      const double target = uniform01(rng) * total;
      double acc = 0;
      pick = pts.size() - 1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, pts.size());  // all points coincide with centroids
    }
    c.push_back(pts[pick]);
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt) {
  if (opt.k == 0) throw InvalidInputError("k must be >= 1");
  if (opt.k > points.size()) {
    throw InvalidInputError("k = " + std::to_string(opt.k) + " exceeds the " + std::to_string(points.size()) + " points");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw InvalidInputError("points differ in dimension");

  KMeansResult r;
  r.centroids = seed_centroids(points, opt);
  r.assignment.assign(points.size(), std::numeric_limits<std::size_t>::max());
  for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points[i], r.centroids[0]);
      for (std::size_t j = 1; j < opt.k; ++j) {
        const double d = sq_dist(points[i], r.centroids[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      changed |= r.assignment[i] != best;
      r.assignment[i] = best;
    }
    if (!changed) {
      r.converged = true;
      break;
    }
    std::vector<std::vector<double>> sums(opt.k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> sizes(opt.k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++sizes[r.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[r.assignment[i]][d] += points[i][d];
    }
    for (std::size_t j = 0; j < opt.k; ++j) {
      if (sizes[j] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) r.centroids[j][d] = sums[j][d] / static_cast<double>(sizes[j]);
    }
    double obj = 0;
    for (std::size_t i = 0; i < points.size(); ++i) obj += sq_dist(points[i], r.centroids[r.assignment[i]]);
    r.objective.push_back(obj);
  }
  return r;
}

}  // namespace semenet
