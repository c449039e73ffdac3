#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

namespace semenet {

/// Output directory of one CLI run:
///   config.json  manifest.csv  checkpoints/  metrics/  heatmaps/
///   log.jsonl    outputs.json (every file the run produced)
/// All writes go through file(), which refuses paths leaving the root.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  /// Absolute path for `relative`, with parent directories created. The
  /// file is recorded as an output.
  std::filesystem::path file(const std::string& relative);
  void write_json(const std::string& relative, const nlohmann::json& doc);
  /// Appends one event line to log.jsonl.
  void log(const nlohmann::json& event);
  /// Writes outputs.json.
  void finish();

  const std::set<std::string>& outputs() const noexcept { return outputs_; }

 private:
  std::filesystem::path root_;
  std::set<std::string> outputs_;
};

}  // namespace semenet
