#include "semenet/nn/model_config.hpp"

#include <algorithm>
#include <fstream>

#include "semenet/error.hpp"

namespace semenet {

using nlohmann::json;

const std::vector<std::string>& layer_kinds() {
  static const std::vector<std::string> kinds{"conv",           "batchnorm",   "relu",  "pool",
                                              "gap",            "dense",       "se_block", "moex",
                                              "residual_block", "dense_block", "upsample_concat"};
  return kinds;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigurationError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

ModelConfig ModelConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigurationError("model config must be a JSON object");
  reject_unknown(doc, {"name", "task", "input", "classes", "layers"}, "model config");
  ModelConfig cfg;
  try {
    cfg.name = doc.value("name", std::string("model"));
    const std::string task = doc.value("task", std::string("classify"));
    if (task == "classify") {
      cfg.task = Task::classify;
    } else if (task == "segment") {
      cfg.task = Task::segment;
    } else {
      throw ConfigurationError("task must be 'classify' or 'segment', got '" + task + "'");
    }
    const auto input = doc.at("input").get<std::vector<std::size_t>>();
    if (input.size() != 3) throw ConfigurationError("input must be [C, H, W]");
    std::copy(input.begin(), input.end(), cfg.input.begin());
    cfg.classes = doc.at("classes").get<std::size_t>();
    for (const auto& entry : doc.at("layers")) {
      LayerSpec spec;
      spec.kind = entry.at("kind").get<std::string>();
      spec.name = entry.value("name", std::string());
      if (entry.contains("inputs")) spec.inputs = entry.at("inputs").get<std::vector<std::string>>();
      for (const auto& [key, value] : entry.items()) {
        if (key != "kind" && key != "name" && key != "inputs") spec.params[key] = value;
      }
      cfg.layers.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed model config: ") + e.what());
  }
  return cfg;
}

json ModelConfig::to_json() const {
  json layers_doc = json::array();
  for (const auto& spec : layers) {
    json entry = spec.params;
    entry["kind"] = spec.kind;
    if (!spec.name.empty()) entry["name"] = spec.name;
    if (!spec.inputs.empty()) entry["inputs"] = spec.inputs;
    layers_doc.push_back(std::move(entry));
  }
  return json{{"name", name},
              {"task", task == Task::classify ? "classify" : "segment"},
              {"input", input},
              {"classes", classes},
              {"layers", std::move(layers_doc)}};
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open model config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigurationError("cannot parse " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void ModelConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace semenet
