#include "semenet/pipeline/run_dir.hpp"

#include <fstream>

#include "semenet/error.hpp"

namespace fs = std::filesystem;

namespace semenet {

RunDir::RunDir(fs::path root) : root_(fs::weakly_canonical(fs::absolute(std::move(root)))) {
  fs::create_directories(root_);
}

fs::path RunDir::file(const std::string& relative) {
  const fs::path rel = fs::path(relative).lexically_normal();
  if (rel.empty() || rel.is_absolute() || *rel.begin() == "..") {
    throw UsageError("output path '" + relative + "' leaves the run directory");
  }
  const fs::path out = root_ / rel;
  fs::create_directories(out.parent_path());
  outputs_.insert(rel.generic_string());
  return out;
}

void RunDir::write_json(const std::string& relative, const nlohmann::json& doc) {
  std::ofstream out(file(relative));
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed to write " + relative);
}

void RunDir::log(const nlohmann::json& event) {
  std::ofstream out(file("log.jsonl"), std::ios::app);
  out << event.dump() << '\n';
}

void RunDir::finish() {
  outputs_.insert("outputs.json");
  nlohmann::json list = nlohmann::json::array();
  for (const auto& o : outputs_) list.push_back(o);
  std::ofstream out(root_ / "outputs.json");
  out << nlohmann::json{{"files", list}}.dump(2) << '\n';
}

}  // namespace semenet
