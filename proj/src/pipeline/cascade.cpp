#include "semenet/pipeline/cascade.hpp"

#include <algorithm>
#include <set>

#include "semenet/error.hpp"
#include "semenet/nn/segment.hpp"
#include "semenet/train/checkpoint.hpp"
#include "semenet/train/trainer.hpp"

namespace semenet {

using json = nlohmann::json;

namespace {

std::vector<std::string> class_names_of(const LoadedCheckpoint& ck, const std::filesystem::path& path) {
  if (!ck.info.is_object() || !ck.info.contains("class_names")) {
    throw ConfigurationError(path.string() + " has no class table");
  }
  return ck.info.at("class_names").get<std::vector<std::string>>();
}

std::vector<double> probabilities(Model<float>& model, const GrayImage& img) {
  const Tensor<double> p = predict_probabilities(model, {img});
  return {p.data().begin(), p.data().end()};
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

CascadeConfig CascadeConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigurationError("cascade config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "stage1" && key != "stage2" && key != "mask" && key != "viral_label" && key != "mask_threshold") {
      throw ConfigurationError("unknown cascade config key '" + key + "'");
    }
  }
  CascadeConfig c;
  try {
    c.stage1 = doc.at("stage1").get<std::string>();
    c.stage2 = doc.at("stage2").get<std::string>();
    if (doc.contains("mask") && !doc.at("mask").is_null()) c.mask = doc.at("mask").get<std::string>();
    c.viral_label = doc.value("viral_label", c.viral_label);
    c.mask_threshold = doc.value("mask_threshold", c.mask_threshold);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("cascade config: ") + e.what());
  }
  return c;
}

json CascadeConfig::to_json() const {
  return {{"stage1", stage1.string()},
          {"stage2", stage2.string()},
          {"mask", mask ? json(mask->string()) : json()},
          {"viral_label", viral_label},
          {"mask_threshold", mask_threshold}};
}

json CascadeLogEntry::to_json() const {
  return {{"id", id}, {"stage1_argmax", stage1_argmax}, {"stage2_invoked", stage2_invoked}};
}

Cascade::Cascade(Model<float> stage1, std::vector<std::string> names1, Model<float> stage2,
                 std::vector<std::string> names2, std::optional<Model<float>> mask, std::string viral_label,
                 double mask_threshold)
    : stage1_(std::move(stage1)),
      stage2_(std::move(stage2)),
      mask_(std::move(mask)),
      names1_(std::move(names1)),
      names2_(std::move(names2)),
      threshold_(mask_threshold) {
  auto check = [](const Model<float>& m, const std::vector<std::string>& names, const char* stage) {
    if (m.config().task != Task::classify) throw ConfigurationError(std::string(stage) + " is not a classifier");
    if (m.config().classes != names.size()) {
      throw ConfigurationError(std::string(stage) + " has " + std::to_string(m.config().classes) +
                               " outputs but a class table of " + std::to_string(names.size()));
    }
  };
  check(stage1_, names1_, "stage 1");
  check(stage2_, names2_, "stage 2");
  auto it = std::find(names1_.begin(), names1_.end(), viral_label);
  if (it == names1_.end()) throw ConfigurationError("stage 1 has no '" + viral_label + "' class to route on");
  viral_ = static_cast<std::size_t>(it - names1_.begin());
  std::set<std::string> all(names1_.begin(), names1_.end());
  for (const auto& n : names2_)
    if (!all.insert(n).second) throw ConfigurationError("class '" + n + "' appears in both stages");
  if (mask_ && mask_->config().task != Task::segment) throw ConfigurationError("mask model is not a segmenter");
}

Cascade Cascade::load(const CascadeConfig& cfg) {
  LoadedCheckpoint a = load_checkpoint(cfg.stage1);
  LoadedCheckpoint b = load_checkpoint(cfg.stage2);
  std::optional<Model<float>> mask;
  if (cfg.mask) mask = load_checkpoint(*cfg.mask).model;
  auto names1 = class_names_of(a, cfg.stage1);
  auto names2 = class_names_of(b, cfg.stage2);
  return Cascade(std::move(a.model), std::move(names1), std::move(b.model), std::move(names2), std::move(mask),
                 cfg.viral_label, cfg.mask_threshold);
}

std::vector<std::string> Cascade::leaf_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names1_.size(); ++i)
    if (i != viral_) out.push_back(names1_[i]);
  out.insert(out.end(), names2_.begin(), names2_.end());
  return out;
}

CascadeResult Cascade::predict(const GrayImage& img, const std::string& id) {
  CascadeResult r;
  r.stage1 = probabilities(stage1_, img);
  const std::size_t top = argmax(r.stage1);
  CascadeLogEntry entry{id, names1_[top], false};
  for (std::size_t i = 0; i < names1_.size(); ++i)
    if (i != viral_) r.leaves.emplace_back(names1_[i], r.stage1[i]);
  if (top != viral_) {
    r.label = names1_[top];
    r.leaves.emplace_back(names1_[viral_], r.stage1[viral_]);
  } else {
    const GrayImage input = mask_ ? apply_mask(img, unet_predict_mask(*mask_, img, threshold_)) : img;
    r.stage2 = probabilities(stage2_, input);
    entry.stage2_invoked = true;
    r.label = names2_[argmax(*r.stage2)];
    for (std::size_t j = 0; j < names2_.size(); ++j) r.leaves.emplace_back(names2_[j], r.stage1[viral_] * (*r.stage2)[j]);
  }
  log_.push_back(std::move(entry));
  return r;
}

}  // namespace semenet
