#include "semenet/image/hash.hpp"

#include <numeric>

#include "semenet/error.hpp"
#include "semenet/image/geometry.hpp"

namespace semenet {

namespace {

HashBits hash_plane(std::vector<double> plane, std::size_t w, std::size_t h, std::size_t side) {
  if (side < 2) throw InvalidInputError("average_hash side must be >= 2");
  const std::vector<double> small = resize_plane(plane, w, h, side, side);
  const double mean = std::accumulate(small.begin(), small.end(), 0.0) / static_cast<double>(small.size());
  HashBits bits(small.size());
  for (std::size_t i = 0; i < small.size(); ++i) bits[i] = small[i] > mean ? 1 : 0;
  return bits;
}

}  // namespace

HashBits average_hash(const GrayImage& img, std::size_t side) {
  return hash_plane(std::vector<double>(img.samples().begin(), img.samples().end()), img.width(), img.height(),
                    side);
}

HashBits average_hash(const std::vector<std::uint16_t>& samples, std::size_t w, std::size_t h, std::size_t side) {
  return hash_plane(std::vector<double>(samples.begin(), samples.end()), w, h, side);
}

std::size_t hamming_distance(const HashBits& a, const HashBits& b) {
  if (a.size() != b.size()) throw InvalidInputError("hash lengths differ");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace semenet
