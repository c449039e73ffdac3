#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semenet/image/image.hpp"
#include "semenet/pipeline/manifest.hpp"

namespace semenet {

/// What a class draws inside the lung field.
enum class Pattern {
  smooth,           ///< nothing beyond the shared lung texture
  lower_blobs,      ///< bright consolidations in the lower lung
  central_texture,  ///< fine texture in the central band
  diffuse_texture,  ///< coarser texture over the whole field
  viral_mix,        ///< central or diffuse texture, alternating by sample
};

struct ClassPattern {
  std::string name;
  Pattern pattern = Pattern::smooth;
};

struct LungSpec {
  double offset_x = 0.19;  // lung centres at (0.5 ± offset_x, centre_y)·size
  double centre_y = 0.52;
  double radius_x = 0.17;
  double radius_y = 0.32;
  double jitter = 2.0;  // pixels of per-image centre and radius jitter
};

/// Class glyph stamped in a corner; correlated with the label.
struct TokenSpec {
  std::size_t size = 10;
  std::size_t x = 0;
  std::size_t y = 0;
  Rect rect() const { return {x, y, size, size}; }
};

struct SyntheticSpec {
  std::size_t size = 64;
  std::vector<ClassPattern> classes{
      {"normal", Pattern::smooth}, {"bacterial", Pattern::lower_blobs}, {"viral", Pattern::viral_mix}};
  std::size_t train = 300;  // per class
  std::size_t validation = 100;
  std::size_t test = 100;
  std::uint64_t seed = 0;
  LungSpec lung;
  /// Multiplies every pattern amplitude; small values make a weak signal.
  double signal = 1.0;
  double noise = 6.0;  // std-dev of lung-field noise, gray levels
  std::optional<TokenSpec> token;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct SyntheticSample {
  std::string id;
  std::string split;
  int label = 0;
  GrayImage image;
  MaskImage mask;  // ground-truth lung field
};

/// Draws one sample. Deterministic in (spec.seed, split, label, index).
SyntheticSample synthesize(const SyntheticSpec& spec, const std::string& split, int label, std::size_t index);

/// All samples, split by split then class then index.
std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec);

/// Overwrites the token region with the glyph of `label`.
void stamp_token(GrayImage& img, const TokenSpec& token, int label);

/// Writes images/<split>/<class>/<id>.png, masks/<same path> and
/// manifest.csv under `root`; returns the manifest.
DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& root);

std::string pattern_name(Pattern p);
Pattern parse_pattern(const std::string& name);

}  // namespace semenet
