#include "semenet/pipeline/experiments.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "semenet/error.hpp"
#include "semenet/eval/metrics.hpp"
#include "semenet/eval/report.hpp"
#include "semenet/explain/gradcam.hpp"
#include "semenet/image/geometry.hpp"
#include "semenet/nn/presets.hpp"
#include "semenet/train/init.hpp"

namespace semenet {

using json = nlohmann::json;

SplitSets to_datasets(const std::vector<SyntheticSample>& samples, const std::vector<std::string>& class_names,
                      bool with_masks) {
  SplitSets out;
  out.train.split = kSplits[0];
  out.validation.split = kSplits[1];
  out.test.split = kSplits[2];
  for (Dataset* d : {&out.train, &out.validation, &out.test}) d->class_names = class_names;
  for (const auto& s : samples) {
    Dataset& d = s.split == kSplits[0] ? out.train : (s.split == kSplits[1] ? out.validation : out.test);
    d.images.push_back(s.image);
    d.labels.push_back(s.label);
    if (with_masks) d.masks.push_back(s.mask);
  }
  return out;
}

std::vector<GrayImage> mask_images(Model<float>& unet, const std::vector<GrayImage>& images, double threshold) {
  std::vector<GrayImage> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(apply_mask(img, unet_predict_mask(unet, img, threshold)));
  return out;
}

Dataset resized(const Dataset& data, std::size_t side) {
  Dataset out = data;
  for (auto& img : out.images) img = resize_bilinear(img, side, side);
  for (auto& m : out.masks) {
    GrayImage g = resize_bilinear(m.to_gray(), side, side);
    for (auto& v : g.samples()) v = v >= 128 ? 255 : 0;
    m = MaskImage::from_gray(g);
  }
  return out;
}

double accuracy_of(Model<float>& model, const Dataset& data) {
  const auto preds = predict_labels(model, data.images);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// ---- ablation ----

AblationConfig AblationConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigurationError("ablation config must be a JSON object");
  AblationConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "data") {
      c.data = SyntheticSpec::from_json(value);
    } else if (key == "train") {
      c.train = TrainConfig::from_json(value);
    } else if (key == "width") {
      c.width = value.get<std::size_t>();
    } else if (key == "clahe_fraction") {
      c.clahe_fraction = value.get<double>();
    } else {
      throw ConfigurationError("unknown ablation config key '" + key + "'");
    }
  }
  return c;
}

json AblationConfig::to_json() const {
  return {{"data", data.to_json()}, {"train", train.to_json()}, {"width", width}, {"clahe_fraction", clahe_fraction}};
}

json AblationRow::to_json() const {
  return {{"variant", variant},
          {"input", input},
          {"accuracy", accuracy},
          {"macro_f1", macro_f1},
          {"macro_auc", macro_auc ? json(*macro_auc) : json()},
          {"seconds", seconds}};
}

std::vector<AblationRow> run_ablation(const AblationConfig& cfg, const std::function<void(const AblationRow&)>& progress) {
  std::vector<std::string> names;
  for (const auto& c : cfg.data.classes) names.push_back(c.name);
  const SplitSets base = to_datasets(generate_synthetic(cfg.data), names);
  const std::size_t side = cfg.data.size, twice = 2 * cfg.data.size;
  const SplitSets big{resized(base.train, twice), resized(base.validation, twice), resized(base.test, twice)};

  struct Variant {
    std::string name;
    bool gap, se, moex;
  };
  const std::vector<Variant> variants{{"base", false, false, false},
                                      {"+gap-head@2x", true, false, false},
                                      {"+se", true, true, false},
                                      {"+se+moex+clahe", true, true, true}};
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    const auto t0 = std::chrono::steady_clock::now();
    const SplitSets& sets = v.gap ? big : base;
    BackboneOptions opt;
    opt.input = v.gap ? twice : side;
    opt.classes = names.size();
    opt.width = cfg.width;
    opt.se = v.se;
    opt.moex = v.moex;
    opt.gap_head = v.gap;
    Model<float> model = build_model<float>(mini_resnet(opt, v.name), cfg.train.seed);
    TrainConfig tc = cfg.train;
    tc.moex = v.moex;
    if (v.moex) tc.augment.clahe_fraction = cfg.clahe_fraction;
    fit(model, sets.train, sets.validation, tc);
    const MetricsReport rep = evaluate(predict_probabilities(model, sets.test.images), sets.test.labels, names);
    AblationRow row;
    row.variant = v.name;
    row.input = opt.input;
    row.accuracy = rep.accuracy;
    row.macro_f1 = rep.f1.macro;
    if (rep.auc) row.macro_auc = rep.auc->macro;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) progress(row);
    rows.push_back(row);
  }
  return rows;
}

// ---- confound ----

json ConfoundArm::to_json() const {
  return {{"train_acc", train_acc}, {"test_acc", test_acc}, {"swapped_acc", swapped_acc}, {"token_mass", token_mass}};
}

namespace {

ConfoundArm confound_arm(const ConfoundConfig& cfg, const SplitSets& sets, const Dataset& swapped,
                         const std::vector<std::string>& names) {
  BackboneOptions opt;
  opt.input = cfg.data.size;
  opt.classes = names.size();
  opt.width = cfg.width;
  Model<float> model = build_model<float>(mini_resnet(opt, "confound"), cfg.train.seed);
  fit(model, sets.train, sets.validation, cfg.train);
  ConfoundArm arm;
  arm.train_acc = accuracy_of(model, sets.train);
  arm.test_acc = accuracy_of(model, sets.test);
  arm.swapped_acc = accuracy_of(model, swapped);
  double mass = 0;
  for (std::size_t i = 0; i < sets.test.size(); ++i) {
    const GradCam cam = grad_cam(model, image_to_tensor<float>(sets.test.images[i]), sets.test.labels[i], cfg.cam_layer);
    mass += region_mass(cam.heatmap, cfg.data.token->rect());
  }
  arm.token_mass = mass / static_cast<double>(sets.test.size());
  return arm;
}

}  // namespace

ConfoundResult run_confound(const ConfoundConfig& cfg, Model<float>& unet) {
  if (!cfg.data.token) throw ConfigurationError("the confound experiment needs a corner token");
  std::vector<std::string> names;
  for (const auto& c : cfg.data.classes) names.push_back(c.name);
  const SplitSets raw = to_datasets(generate_synthetic(cfg.data), names);
  Dataset swapped = raw.test;
  const int k = static_cast<int>(names.size());
  for (std::size_t i = 0; i < swapped.size(); ++i) stamp_token(swapped.images[i], *cfg.data.token, (swapped.labels[i] + 1) % k);

  ConfoundResult out;
  out.unmasked = confound_arm(cfg, raw, swapped, names);
  SplitSets masked = raw;
  for (Dataset* d : {&masked.train, &masked.validation, &masked.test}) d->images = mask_images(unet, d->images, cfg.mask_threshold);
  Dataset masked_swapped = swapped;
  masked_swapped.images = mask_images(unet, swapped.images, cfg.mask_threshold);
  out.masked = confound_arm(cfg, masked, masked_swapped, names);
  return out;
}

// ---- segmentation ----

UnetRun train_unet(const SyntheticSpec& data, const TrainConfig& train, std::size_t width) {
  const SplitSets sets = to_datasets(generate_synthetic(data), {}, true);
  UnetRun run{build_model<float>(unet_toy(data.size, width), train.seed), {}, 0.0};
  run.state = fit(run.model, sets.train, sets.validation, train);
  double iou = 0;
  for (std::size_t i = 0; i < sets.test.size(); ++i) iou += mean_iou(unet_predict_mask(run.model, sets.test.images[i]), sets.test.masks[i]);
  run.test_iou = iou / static_cast<double>(sets.test.size());
  return run;
}

// ---- cascade ----

CascadeExperimentResult run_cascade_experiment(const CascadeExperimentConfig& cfg,
                                               const std::optional<Model<float>>& unet) {
  SyntheticSpec s1;
  s1.size = cfg.size;
  s1.seed = cfg.seed;
  s1.train = cfg.train_per_class;
  s1.validation = cfg.val_per_class;
  s1.test = 1;
  s1.classes = {{"normal", Pattern::smooth}, {"bacterial", Pattern::lower_blobs}, {"viral", Pattern::viral_mix}};
  SyntheticSpec s2 = s1;
  s2.seed = cfg.seed + 1;
  s2.classes = {{"covid-like", Pattern::diffuse_texture}, {"other-viral", Pattern::central_texture}};
  SyntheticSpec st = s1;
  st.seed = cfg.seed + 2;
  st.train = st.validation = 1;
  st.test = cfg.test_per_leaf;
  st.classes = {{"normal", Pattern::smooth},
                {"bacterial", Pattern::lower_blobs},
                {"covid-like", Pattern::diffuse_texture},
                {"other-viral", Pattern::central_texture}};

  std::vector<std::string> n1{"normal", "bacterial", "viral"}, n2{"covid-like", "other-viral"};
  const SplitSets d1 = to_datasets(generate_synthetic(s1), n1);
  SplitSets d2 = to_datasets(generate_synthetic(s2), n2);
  std::optional<Model<float>> mask;
  if (unet) {
    mask = unet->clone();
    // Union of raw and masked copies.
    for (Dataset* d : {&d2.train, &d2.validation}) {
      const auto masked = mask_images(*mask, d->images);
      d->images.insert(d->images.end(), masked.begin(), masked.end());
      const auto labels = d->labels;
      d->labels.insert(d->labels.end(), labels.begin(), labels.end());
    }
  }

  BackboneOptions opt;
  opt.input = cfg.size;
  opt.width = cfg.width;
  opt.classes = 3;
  Model<float> m1 = build_model<float>(mini_resnet(opt, "stage1"), cfg.train.seed);
  fit(m1, d1.train, d1.validation, cfg.train);
  opt.classes = 2;
  Model<float> m2 = build_model<float>(mini_densenet(opt, "stage2"), cfg.train.seed + 1);
  fit(m2, d2.train, d2.validation, cfg.train);

  Cascade cascade(std::move(m1), n1, std::move(m2), n2, std::move(mask));
  CascadeExperimentResult out;
  std::size_t hits = 0;
  for (const auto& s : generate_synthetic(st)) {
    if (s.split != kSplits[2]) continue;
    const CascadeResult r = cascade.predict(s.image, s.id);
    hits += r.label == st.classes[static_cast<std::size_t>(s.label)].name;
    if (r.stage2) {
      double total = 0;
      for (const auto& [_, p] : r.leaves) total += p;
      out.max_leaf_sum_error = std::max(out.max_leaf_sum_error, std::abs(total - 1.0));
    }
    ++out.images;
  }
  out.log = cascade.log();
  for (const auto& e : out.log) {
    out.stage2_calls += e.stage2_invoked;
    if (e.stage2_invoked != (e.stage1_argmax == "viral")) out.routing_respected = false;
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(out.images);
  return out;
}

}  // namespace semenet
