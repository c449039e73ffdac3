#include "semenet/pipeline/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "semenet/error.hpp"
#include "semenet/image/image_io.hpp"
#include "semenet/rng.hpp"

namespace fs = std::filesystem;

namespace semenet {

int DatasetManifest::label_index(const std::string& name) const {
  auto it = std::find(class_names.begin(), class_names.end(), name);
  if (it == class_names.end()) throw InvalidInputError("unknown class '" + name + "'");
  return static_cast<int>(it - class_names.begin());
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.path).second) throw InvalidInputError("path listed twice: " + r.path);
    label_index(r.label);
    if (!r.split.empty() && std::find(kSplits.begin(), kSplits.end(), r.split) == kSplits.end()) {
      throw InvalidInputError("unknown split '" + r.split + "' for " + r.path);
    }
  }
}

std::size_t DatasetManifest::count(const std::string& split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const ManifestRecord& r) { return r.split == split; }));
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "path,label,split\n";
  for (const auto& r : m.records) {
    if (r.path.find_first_of(",\"\n") != std::string::npos) {
      throw InvalidInputError("manifest paths may not contain commas, quotes or newlines: " + r.path);
    }
    out << r.path << ',' << r.label << ',' << r.split << '\n';
  }
}

DatasetManifest read_manifest(const fs::path& path, std::vector<std::string> class_names) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot read manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  m.class_names = std::move(class_names);
  const bool fixed = !m.class_names.empty();
  std::string line;
  if (!std::getline(in, line) || line != "path,label,split") {
    throw InvalidInputError(path.string() + ": expected header 'path,label,split'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 3) throw InvalidInputError(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
    if (std::find(m.class_names.begin(), m.class_names.end(), cols[1]) == m.class_names.end()) {
      if (fixed) throw InvalidInputError(path.string() + ":" + std::to_string(lineno) + ": unknown class '" + cols[1] + "'");
      m.class_names.push_back(cols[1]);
    }
    m.records.push_back({cols[0], cols[1], cols[2]});
  }
  m.validate();
  return m;
}

DatasetManifest ingest(const fs::path& root, bool skip_bad, IngestReport* report) {
  if (!fs::is_directory(root)) throw InvalidInputError("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw InvalidInputError(root.string() + " has no class directories");

  DatasetManifest m;
  m.root = root;
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  for (const auto& dir : dirs) {
    const std::string cls = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::size_t good = 0;
    for (const auto& f : files) {
      try {
        read_gray(f);
      } catch (const std::exception& e) {
        rep.bad_files.push_back(fs::relative(f, root).generic_string() + ": " + e.what());
        continue;
      }
      m.records.push_back({fs::relative(f, root).generic_string(), cls, ""});
      ++good;
    }
    if (good == 0 && files.empty()) throw InvalidInputError("class '" + cls + "' has no images");
    m.class_names.push_back(cls);
  }
  if (!rep.bad_files.empty() && !skip_bad) {
    std::string msg = "undecodable files:";
    for (const auto& b : rep.bad_files) msg += "\n  " + b;
    throw InvalidInputError(msg);
  }
  for (const auto& cls : m.class_names) {
    if (std::none_of(m.records.begin(), m.records.end(), [&](const ManifestRecord& r) { return r.label == cls; })) {
      throw InvalidInputError("class '" + cls + "' has no readable images");
    }
  }
  return m;
}

DatasetManifest split(DatasetManifest m, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigurationError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigurationError("split ratios must sum to 1");
  for (std::size_t c = 0; c < m.class_names.size(); ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.records.size(); ++i)
      if (m.records[i].label == m.class_names[c]) idx.push_back(i);
    Rng rng = make_rng(seed, {0x5b1, c});
    std::shuffle(idx.begin(), idx.end(), rng);
    const double n = static_cast<double>(idx.size());
    const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * n));
    const auto n_test = static_cast<std::size_t>(std::llround(ratios[2] * n));
    if (n_val + n_test > idx.size()) throw InvalidInputError("class '" + m.class_names[c] + "' is too small to split");
    const std::size_t n_train = idx.size() - n_val - n_test;
    const std::array<std::size_t, 3> counts{n_train, n_val, n_test};
    for (std::size_t s = 0; s < 3; ++s) {
      if (ratios[s] > 0 && counts[s] == 0) {
        throw InvalidInputError("class '" + m.class_names[c] + "' is too small to appear in the " + kSplits[s] +
                                " split");
      }
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      m.records[idx[k]].split = k < n_train ? kSplits[0] : (k < n_train + n_val ? kSplits[1] : kSplits[2]);
    }
  }
  return m;
}

Dataset load_split(const DatasetManifest& m, const std::string& split, bool with_masks) {
  Dataset d;
  d.split = split;
  d.class_names = m.class_names;
  for (const auto& r : m.records) {
    if (r.split != split) continue;
    d.images.push_back(read_gray(m.root / r.path));
    d.labels.push_back(m.label_index(r.label));
    if (with_masks) {
      const fs::path mp = m.root / "masks" / r.path;
      if (!fs::exists(mp)) throw InvalidInputError("missing mask " + mp.string());
      d.masks.push_back(MaskImage::from_gray(read_gray(mp)));
    }
  }
  if (d.images.empty()) throw InvalidInputError("manifest has no '" + split + "' records");
  return d;
}

}  // namespace semenet
