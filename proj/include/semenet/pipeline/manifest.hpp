#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semenet/train/dataset.hpp"

namespace semenet {

inline const std::array<std::string, 3> kSplits{"train", "validation", "test"};

struct ManifestRecord {
  std::string path;  // relative to the manifest's root
  std::string label;
  std::string split;  // empty until split()
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> class_names;
  std::vector<ManifestRecord> records;

  int label_index(const std::string& name) const;
  /// Unique paths, known labels, known splits.
  void validate() const;
  std::size_t count(const std::string& split) const;
};

/// Writes "path,label,split" rows; reading resolves paths against the
/// manifest's directory and takes class order from first appearance unless
/// `class_names` is given.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path, std::vector<std::string> class_names = {});

struct IngestReport {
  std::vector<std::string> bad_files;  // "path: reason"
};

/// Class-per-subdirectory ingestion in lexicographic order. Undecodable
/// files abort the run (listing all of them) unless skip_bad is set.
DatasetManifest ingest(const std::filesystem::path& root, bool skip_bad = false, IngestReport* report = nullptr);

/// Stratified split. Each class gets round(r·n) validation and test
/// samples and the rest train; a class that cannot fill every split with
/// a positive ratio is an error.
DatasetManifest split(DatasetManifest m, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Loads one split. Masks are read from <root>/masks/<path> when
/// `with_masks` is set.
Dataset load_split(const DatasetManifest& m, const std::string& split, bool with_masks = false);

}  // namespace semenet
