#include "semenet/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "semenet/error.hpp"
#include "semenet/image/image_io.hpp"
#include "semenet/rng.hpp"

namespace semenet {

namespace {

using json = nlohmann::json;

struct Ellipse {
  double cx, cy, rx, ry;
  bool inside(double px, double py) const {
    const double u = (px - cx) / rx, v = (py - cy) / ry;
    return u * u + v * v <= 1.0;
  }
};

std::array<Ellipse, 2> nominal_lungs(const SyntheticSpec& s) {
  const double n = static_cast<double>(s.size);
  const LungSpec& l = s.lung;
  return {Ellipse{(0.5 - l.offset_x) * n, l.centre_y * n, l.radius_x * n, l.radius_y * n},
          Ellipse{(0.5 + l.offset_x) * n, l.centre_y * n, l.radius_x * n, l.radius_y * n}};
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fixed torso shared by every image: bright soft tissue inside an
// ellipse, near-black air outside it.
double body(std::size_t x, std::size_t y, std::size_t n) {
  const double u = ((static_cast<double>(x) + 0.5) / static_cast<double>(n) - 0.5) / 0.47;
  const double v = ((static_cast<double>(y) + 0.5) / static_cast<double>(n) - 0.56) / 0.5;
  if (u * u + v * v > 1.0) return 12.0;
  return 165.0 - 45.0 * u * u + 15.0 * v;
}

// Stripe and checker glyphs, one per class.
bool glyph_bit(int label, std::size_t i, std::size_t j) {
  switch (label) {
    case 0: return (j / 2) % 2 == 0;
    case 1: return (i / 2) % 2 == 0;
    case 2: return ((i / 2) + (j / 2)) % 2 == 0;
    case 3: return ((i + j) / 2) % 2 == 0;
    default: return (mix64(static_cast<std::uint64_t>(label) * 131 + i * 17 + j) & 1) != 0;
  }
}

std::size_t split_index(const std::string& split) {
  for (std::size_t i = 0; i < kSplits.size(); ++i)
    if (kSplits[i] == split) return i;
  throw InvalidInputError("unknown split '" + split + "'");
}

void texture(std::vector<double>& field, const std::vector<std::uint8_t>& lung, std::size_t n, double amp,
             double period, double phase_x, double phase_y, double band_lo, double band_hi) {
  const double w = 2.0 * std::numbers::pi / period;
  for (std::size_t y = 0; y < n; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(n);
    if (fy < band_lo || fy > band_hi) continue;
    for (std::size_t x = 0; x < n; ++x) {
      if (!lung[y * n + x]) continue;
      field[y * n + x] += amp * std::sin(w * static_cast<double>(x) + phase_x) * std::sin(w * static_cast<double>(y) + phase_y);
    }
  }
}

}  // namespace

std::string pattern_name(Pattern p) {
  switch (p) {
    case Pattern::smooth: return "smooth";
    case Pattern::lower_blobs: return "lower_blobs";
    case Pattern::central_texture: return "central_texture";
    case Pattern::diffuse_texture: return "diffuse_texture";
    case Pattern::viral_mix: return "viral_mix";
  }
  return "?";
}

Pattern parse_pattern(const std::string& name) {
  for (Pattern p : {Pattern::smooth, Pattern::lower_blobs, Pattern::central_texture, Pattern::diffuse_texture,
                    Pattern::viral_mix})
    if (pattern_name(p) == name) return p;
  throw ConfigurationError("unknown pattern '" + name + "'");
}

void SyntheticSpec::validate() const {
  if (size < 16) throw ConfigurationError("synthetic size must be at least 16");
  if (classes.size() < 2) throw ConfigurationError("synthetic data needs at least two classes");
  std::set<std::string> names;
  for (const auto& c : classes)
    if (c.name.empty() || !names.insert(c.name).second) throw ConfigurationError("class names must be unique and non-empty");
  if (train == 0 || validation == 0 || test == 0) throw ConfigurationError("every split needs at least one image per class");
  if (!(signal >= 0.0) || !(noise >= 0.0) || !(lung.jitter >= 0.0)) {
    throw ConfigurationError("signal, noise and jitter must be non-negative");
  }
  const double n = static_cast<double>(size);
  for (const Ellipse& e : nominal_lungs(*this)) {
    if (e.cx - e.rx - lung.jitter < 0 || e.cx + e.rx + lung.jitter > n || e.cy - e.ry - lung.jitter < 0 ||
        e.cy + e.ry + lung.jitter > n || e.rx <= lung.jitter || e.ry <= lung.jitter) {
      throw ConfigurationError("lung field does not fit the image");
    }
  }
  if (token) {
    const Rect r = token->rect();
    if (r.area() == 0 || r.x + r.width > size || r.y + r.height > size) {
      throw ConfigurationError("token does not fit the image");
    }
    // Widest lung any jitter draw can produce.
    for (const Ellipse& e : nominal_lungs(*this))
      for (double dx : {-lung.jitter, 0.0, lung.jitter})
        for (double dy : {-lung.jitter, 0.0, lung.jitter}) {
          const Ellipse big{e.cx + dx, e.cy + dy, e.rx + lung.jitter, e.ry + lung.jitter};
          for (std::size_t y = r.y; y < r.y + r.height; ++y)
            for (std::size_t x = r.x; x < r.x + r.width; ++x)
              if (big.inside(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
                throw ConfigurationError("token region overlaps the lung field");
              }
        }
  }
}

SyntheticSpec SyntheticSpec::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigurationError("synthetic spec must be a JSON object");
  SyntheticSpec s;
  static const std::set<std::string> known{"size",   "classes", "train", "validation", "test", "seed",
                                           "lung",   "signal",  "noise", "token"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw ConfigurationError("unknown synthetic spec key '" + key + "'");
  try {
    s.size = doc.value("size", s.size);
    s.train = doc.value("train", s.train);
    s.validation = doc.value("validation", s.validation);
    s.test = doc.value("test", s.test);
    s.seed = doc.value("seed", s.seed);
    s.signal = doc.value("signal", s.signal);
    s.noise = doc.value("noise", s.noise);
    if (doc.contains("classes")) {
      s.classes.clear();
      for (const auto& c : doc.at("classes")) {
        for (const auto& [key, _] : c.items())
          if (key != "name" && key != "pattern") throw ConfigurationError("unknown class key '" + key + "'");
        s.classes.push_back({c.at("name").get<std::string>(), parse_pattern(c.at("pattern").get<std::string>())});
      }
    }
    if (doc.contains("lung")) {
      const json& l = doc.at("lung");
      static const std::set<std::string> lung_keys{"offset_x", "centre_y", "radius_x", "radius_y", "jitter"};
      for (const auto& [key, _] : l.items())
        if (!lung_keys.count(key)) throw ConfigurationError("unknown lung key '" + key + "'");
      s.lung.offset_x = l.value("offset_x", s.lung.offset_x);
      s.lung.centre_y = l.value("centre_y", s.lung.centre_y);
      s.lung.radius_x = l.value("radius_x", s.lung.radius_x);
      s.lung.radius_y = l.value("radius_y", s.lung.radius_y);
      s.lung.jitter = l.value("jitter", s.lung.jitter);
    }
    if (doc.contains("token") && !doc.at("token").is_null()) {
      const json& t = doc.at("token");
      for (const auto& [key, _] : t.items())
        if (key != "size" && key != "x" && key != "y") throw ConfigurationError("unknown token key '" + key + "'");
      TokenSpec tok;
      tok.size = t.value("size", tok.size);
      tok.x = t.value("x", tok.x);
      tok.y = t.value("y", tok.y);
      s.token = tok;
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

json SyntheticSpec::to_json() const {
  json cls = json::array();
  for (const auto& c : classes) cls.push_back({{"name", c.name}, {"pattern", pattern_name(c.pattern)}});
  json doc{{"size", size},
           {"classes", cls},
           {"train", train},
           {"validation", validation},
           {"test", test},
           {"seed", seed},
           {"lung",
            {{"offset_x", lung.offset_x},
             {"centre_y", lung.centre_y},
             {"radius_x", lung.radius_x},
             {"radius_y", lung.radius_y},
             {"jitter", lung.jitter}}},
           {"signal", signal},
           {"noise", noise},
           {"token", nullptr}};
  if (token) doc["token"] = {{"size", token->size}, {"x", token->x}, {"y", token->y}};
  return doc;
}

void stamp_token(GrayImage& img, const TokenSpec& token, int label) {
  for (std::size_t j = 0; j < token.size; ++j)
    for (std::size_t i = 0; i < token.size; ++i) img.at(token.x + i, token.y + j) = glyph_bit(label, i, j) ? 255 : 0;
}

SyntheticSample synthesize(const SyntheticSpec& spec, const std::string& split, int label, std::size_t index) {
  if (label < 0 || static_cast<std::size_t>(label) >= spec.classes.size()) {
    throw InvalidInputError("label " + std::to_string(label) + " outside the class table");
  }
  const std::size_t n = spec.size;
  Rng rng = make_rng(spec.seed, {0x5e7, split_index(split), static_cast<std::uint64_t>(label), index});

  // Geometry first so the mask depends on nothing else.
  const double j = spec.lung.jitter;
  const double shift_x = uniform(rng, -j, j), shift_y = uniform(rng, -j, j);
  std::array<Ellipse, 2> lungs = nominal_lungs(spec);
  for (Ellipse& e : lungs) {
    e.cx += shift_x;
    e.cy += shift_y;
    e.rx += uniform(rng, -j, j);
    e.ry += uniform(rng, -j, j);
  }
  SyntheticSample out;
  out.split = split;
  out.label = label;
  out.id = spec.classes[static_cast<std::size_t>(label)].name + "_" + std::to_string(index);
  out.mask = MaskImage(n, n);
  std::vector<std::uint8_t> lung(n * n, 0);
  std::vector<int> side(n * n, -1);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      for (int s = 0; s < 2; ++s)
        if (lungs[s].inside(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
          lung[y * n + x] = 1;
          side[y * n + x] = s;
          out.mask.at(x, y) = 1;
        }

  const double brightness = uniform(rng, -8.0, 8.0);
  std::vector<double> field(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      if (!lung[y * n + x]) continue;
      const Ellipse& e = lungs[side[y * n + x]];
      field[y * n + x] = 75.0 + brightness + 10.0 * ((static_cast<double>(y) + 0.5 - e.cy) / e.ry);
    }

  Pattern pattern = spec.classes[static_cast<std::size_t>(label)].pattern;
  if (pattern == Pattern::viral_mix) pattern = index % 2 == 0 ? Pattern::central_texture : Pattern::diffuse_texture;
  const double amp = spec.signal;
  const double two_pi = 2.0 * std::numbers::pi;
  switch (pattern) {
    case Pattern::smooth:
      break;
    case Pattern::lower_blobs: {
      const std::size_t count = 2 + uniform_index(rng, 2);
      for (std::size_t b = 0; b < count; ++b) {
        const Ellipse& e = lungs[uniform_index(rng, 2)];
        const double bx = e.cx + uniform(rng, -0.5, 0.5) * e.rx;
        const double by = e.cy + uniform(rng, 0.15, 0.65) * e.ry;
        const double sigma = uniform(rng, 2.5, 4.0);
        const double height = amp * uniform(rng, 60.0, 80.0);
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x = 0; x < n; ++x) {
            if (!lung[y * n + x]) continue;
            const double dx = static_cast<double>(x) + 0.5 - bx, dy = static_cast<double>(y) + 0.5 - by;
            field[y * n + x] += height * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          }
      }
      break;
    }
    case Pattern::central_texture: {
      const double cy = (lungs[0].cy + lungs[1].cy) / (2.0 * static_cast<double>(n));
      const double band = 0.35 * (lungs[0].ry + lungs[1].ry) / (2.0 * static_cast<double>(n));
      texture(field, lung, n, amp * 28.0, 4.0, uniform(rng, 0, two_pi), uniform(rng, 0, two_pi), cy - band,
              cy + band);
      break;
    }
    case Pattern::diffuse_texture:
      texture(field, lung, n, amp * 22.0, 7.0, uniform(rng, 0, two_pi), uniform(rng, 0, two_pi), 0.0, 1.0);
      break;
    case Pattern::viral_mix:
      break;
  }

  out.image = GrayImage(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t i = y * n + x;
      // Noise is drawn for every pixel so the stream layout is fixed.
      const double noise = spec.noise * gaussian(rng);
      out.image.at(x, y) = clamp_round(lung[i] ? field[i] + noise : body(x, y, n));
    }
  if (spec.token) stamp_token(out.image, *spec.token, label);
  return out;
}

std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticSample> out;
  const std::array<std::size_t, 3> counts{spec.train, spec.validation, spec.test};
  for (std::size_t s = 0; s < kSplits.size(); ++s)
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      const std::size_t first = out.size();
      out.resize(first + counts[s]);
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < counts[s]; ++i) out[first + i] = synthesize(spec, kSplits[s], static_cast<int>(c), i);
    }
  return out;
}

DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& root) {
  const auto samples = generate_synthetic(spec);
  DatasetManifest m;
  m.root = root;
  for (const auto& c : spec.classes) m.class_names.push_back(c.name);
  for (const auto& s : samples) {
    const std::string rel = "images/" + s.split + "/" + m.class_names[static_cast<std::size_t>(s.label)] + "/" + s.id + ".png";
    std::filesystem::create_directories((root / rel).parent_path());
    std::filesystem::create_directories((root / "masks" / rel).parent_path());
    write_png(root / rel, s.image);
    write_png(root / "masks" / rel, s.mask.to_gray());
    m.records.push_back({rel, m.class_names[static_cast<std::size_t>(s.label)], s.split});
  }
  write_manifest(root / "manifest.csv", m);
  return m;
}

}  // namespace semenet
