#include "semenet/pipeline/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "semenet/error.hpp"
#include "semenet/eval/kmeans.hpp"
#include "semenet/eval/report.hpp"
#include "semenet/explain/gradcam.hpp"
#include "semenet/explain/overlay.hpp"
#include "semenet/image/hash.hpp"
#include "semenet/image/image_io.hpp"
#include "semenet/nn/presets.hpp"
#include "semenet/nn/segment.hpp"
#include "semenet/pipeline/cascade.hpp"
#include "semenet/pipeline/experiments.hpp"
#include "semenet/pipeline/manifest.hpp"
#include "semenet/pipeline/run_dir.hpp"
#include "semenet/pipeline/synthetic.hpp"
#include "semenet/tensor/gradcheck.hpp"
#include "semenet/train/checkpoint.hpp"
#include "semenet/train/init.hpp"

namespace fs = std::filesystem;

namespace semenet {

namespace {

using json = nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string run_dir = "run";
  std::string checkpoint;
  std::string split = "test";
  std::string image;
  std::optional<int> cls;
  std::string layer;
  std::string root;
  bool skip_bad = false;
};

json load_config(const Flags& f) {
  if (f.config.empty()) return json::object();
  std::ifstream in(f.config);
  if (!in) throw ConfigurationError("cannot read config " + f.config);
  try {
    json doc = json::parse(in);
    if (!doc.is_object()) throw ConfigurationError(f.config + ": config must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigurationError(f.config + ": " + e.what());
  }
}

void only_keys(const json& doc, std::initializer_list<const char*> keys, const std::string& what) {
  for (const auto& [key, _] : doc.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) throw ConfigurationError("unknown " + what + " config key '" + key + "'");
  }
}

template <typename T>
T get(const json& doc, const char* key, T fallback) {
  try {
    return doc.contains(key) && !doc.at(key).is_null() ? doc.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string required(const json& doc, const char* key) {
  const std::string v = get<std::string>(doc, key, "");
  if (v.empty()) throw ConfigurationError(std::string("config key '") + key + "' is required");
  return v;
}

void require_flag(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

TrainConfig train_config(const json& doc, const Flags& f) {
  TrainConfig tc = doc.contains("train") ? TrainConfig::from_json(doc.at("train")) : TrainConfig{};
  if (f.seed) tc.seed = *f.seed;
  tc.validate();
  return tc;
}

std::string display_split(const std::string& s) {
  if (std::find(kSplits.begin(), kSplits.end(), s) == kSplits.end()) {
    throw UsageError("--split must be train, validation or test");
  }
  return s;
}

void save_history(RunDir& run, const std::vector<EpochRecord>& history) {
  write_history(run.file("metrics/history.jsonl"), history);
}

// ---- subcommands ----

int cmd_gen_data(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  SyntheticSpec spec = SyntheticSpec::from_json(doc);
  if (f.seed) spec.seed = *f.seed;
  RunDir run(f.run_dir);
  run.write_json("config.json", spec.to_json());
  const DatasetManifest m = write_synthetic(spec, run.root());
  run.file("manifest.csv");
  for (const auto& r : m.records) {
    run.file(r.path);
    run.file("masks/" + r.path);
  }
  run.log({{"event", "gen-data"}, {"images", m.records.size()}});
  run.finish();
  out << "wrote " << m.records.size() << " images to " << run.root().string() << '\n';
  return kExitOk;
}

int cmd_ingest(const Flags& f, std::ostream& out, std::ostream& err) {
  json doc = load_config(f);
  only_keys(doc, {"root", "ratios", "seed", "skip_bad"}, "ingest");
  const std::string root = f.root.empty() ? required(doc, "root") : f.root;
  const auto ratios = get<std::array<double, 3>>(doc, "ratios", {0.8, 0.1, 0.1});
  const std::uint64_t seed = f.seed.value_or(get<std::uint64_t>(doc, "seed", 0));
  const bool skip = f.skip_bad || get<bool>(doc, "skip_bad", false);
  IngestReport report;
  DatasetManifest m = split(ingest(root, skip, &report), ratios, seed);
  for (const auto& b : report.bad_files) err << "skipped " << b << '\n';
  for (auto& r : m.records) r.path = absolute((fs::path(root) / r.path).string());
  RunDir run(f.run_dir);
  run.write_json("config.json", {{"root", absolute(root)}, {"ratios", ratios}, {"seed", seed}, {"skip_bad", skip}});
  write_manifest(run.file("manifest.csv"), m);
  run.log({{"event", "ingest"}, {"records", m.records.size()}, {"skipped", report.bad_files}});
  run.finish();
  out << m.records.size() << " records, " << m.class_names.size() << " classes\n";
  return kExitOk;
}

ModelConfig model_from(const json& doc, std::size_t input, std::size_t classes) {
  if (!doc.contains("model")) return preset_config("mini-seme", input, classes);
  const json& m = doc.at("model");
  if (m.is_string()) return preset_config(m.get<std::string>(), input, classes);
  return ModelConfig::from_json(m);
}

/// Masks every split's images when `mask` names a U-Net checkpoint.
void maybe_mask(const std::string& mask, std::initializer_list<Dataset*> sets) {
  if (mask.empty()) return;
  Model<float> unet = load_checkpoint(mask).model;
  for (Dataset* d : sets) d->images = mask_images(unet, d->images);
}

int cmd_train(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  only_keys(doc, {"manifest", "model", "input", "train", "mask"}, "train");
  const std::string manifest_path = absolute(required(doc, "manifest"));
  const std::size_t input = get<std::size_t>(doc, "input", 64);
  const std::string mask = get<std::string>(doc, "mask", "");
  const TrainConfig tc = train_config(doc, f);
  const DatasetManifest m = read_manifest(manifest_path);
  const ModelConfig mc = model_from(doc, input, m.class_names.size());
  if (mc.task != Task::classify) throw ConfigurationError("train needs a classifier; use segment-train for U-Nets");
  Dataset tr = load_split(m, "train"), va = load_split(m, "validation");
  maybe_mask(mask, {&tr, &va});

  RunDir run(f.run_dir);
  json resolved{{"manifest", manifest_path}, {"model", mc.to_json()}, {"input", input}, {"train", tc.to_json()},
                {"mask", mask.empty() ? json() : json(absolute(mask))}};
  run.write_json("config.json", resolved);
  const json info{{"class_names", m.class_names}, {"manifest", manifest_path}, {"mask", resolved["mask"]}};

  std::optional<TrainState> resume;
  Model<float> model = build_model<float>(mc, tc.seed);
  if (!f.checkpoint.empty()) {
    LoadedCheckpoint ck = load_checkpoint(f.checkpoint);
    if (ck.model.config().to_json() != mc.to_json()) throw ConfigurationError("checkpoint model differs from config");
    model = std::move(ck.model);
    resume = ck.state;
  }
  const fs::path last = run.file("checkpoints/last.ckpt"), best = run.file("checkpoints/best.ckpt");
  FitHooks hooks;
  hooks.on_epoch = [&](const Model<float>& mdl, const TrainState& st) {
    save_checkpoint(last, mdl, &st, tc.to_json(), info);
    const EpochRecord& r = st.history.back();
    run.log({{"event", "epoch"}, {"record", r.to_json()}});
    out << "epoch " << r.epoch << " loss " << r.train_loss << " val_acc " << r.val_acc << '\n';
  };
  hooks.on_best = [&](const Model<float>& mdl, const TrainState& st) { save_checkpoint(best, mdl, &st, tc.to_json(), info); };
  const TrainState st = fit(model, tr, va, tc, resume, hooks);
  save_history(run, st.history);
  run.finish();
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  require_flag(f.checkpoint, "--checkpoint");
  json doc = load_config(f);
  only_keys(doc, {"manifest"}, "eval");
  LoadedCheckpoint ck = load_checkpoint(f.checkpoint);
  if (ck.model.config().task != Task::classify) throw UsageError("eval needs a classifier checkpoint");
  const auto names = ck.info.value("class_names", std::vector<std::string>{});
  std::string manifest = get<std::string>(doc, "manifest", "");
  if (manifest.empty()) manifest = ck.info.value("manifest", std::string());
  if (manifest.empty()) throw ConfigurationError("no manifest in the config or the checkpoint");
  Dataset d = load_split(read_manifest(manifest, names), display_split(f.split));
  const std::string mask = ck.info.contains("mask") && ck.info["mask"].is_string() ? ck.info["mask"].get<std::string>() : "";
  maybe_mask(mask, {&d});

  const MetricsReport rep = evaluate(predict_probabilities(ck.model, d.images), d.labels, d.class_names);
  RunDir run(f.run_dir);
  run.write_json("config.json", {{"checkpoint", absolute(f.checkpoint)}, {"manifest", manifest}, {"split", f.split}});
  json metrics = to_json(rep);
  metrics["split"] = f.split;
  metrics["images"] = d.size();
  run.write_json("metrics/metrics.json", metrics);
  write_confusion_csv(run.file("metrics/confusion.csv"), rep.confusion);
  if (rep.auc) write_roc_csv(run.file("metrics/roc.csv"), *rep.auc, d.class_names);
  run.finish();
  out << "accuracy " << rep.accuracy << " macro_f1 " << rep.f1.macro;
  if (rep.auc) out << " macro_auc " << rep.auc->macro;
  out << '\n';
  return kExitOk;
}

int cmd_segment_train(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  only_keys(doc, {"manifest", "input", "width", "train"}, "segment-train");
  const std::string manifest_path = absolute(required(doc, "manifest"));
  const std::size_t input = get<std::size_t>(doc, "input", 64);
  const std::size_t width = get<std::size_t>(doc, "width", 8);
  const TrainConfig tc = train_config(doc, f);
  const DatasetManifest m = read_manifest(manifest_path);
  const Dataset tr = load_split(m, "train", true), va = load_split(m, "validation", true);
  RunDir run(f.run_dir);
  run.write_json("config.json", {{"manifest", manifest_path}, {"input", input}, {"width", width}, {"train", tc.to_json()}});
  Model<float> unet = build_model<float>(unet_toy(input, width), tc.seed);
  const json info{{"manifest", manifest_path}};
  const fs::path best = run.file("checkpoints/unet.ckpt");
  FitHooks hooks;
  hooks.on_epoch = [&](const Model<float>&, const TrainState& st) {
    const EpochRecord& r = st.history.back();
    run.log({{"event", "epoch"}, {"record", r.to_json()}});
    out << "epoch " << r.epoch << " loss " << r.train_loss << " val_iou " << r.val_iou.value_or(0.0) << '\n';
  };
  hooks.on_best = [&](const Model<float>& mdl, const TrainState& st) { save_checkpoint(best, mdl, &st, tc.to_json(), info); };
  const TrainState st = fit(unet, tr, va, tc, std::nullopt, hooks);
  save_history(run, st.history);
  run.write_json("metrics/segment.json", {{"best_epoch", st.best_epoch}, {"best_val_iou", st.best_metric}});
  run.finish();
  return kExitOk;
}

int cmd_segment(const Flags& f, std::ostream& out) {
  require_flag(f.checkpoint, "--checkpoint");
  require_flag(f.image, "--image");
  json doc = load_config(f);
  only_keys(doc, {"threshold", "keep_components", "fill_holes", "cleanup"}, "segment");
  MaskCleanup cleanup;
  cleanup.enabled = get<bool>(doc, "cleanup", true);
  cleanup.keep_components = get<std::size_t>(doc, "keep_components", cleanup.keep_components);
  cleanup.fill_holes = get<bool>(doc, "fill_holes", cleanup.fill_holes);
  const double threshold = get<double>(doc, "threshold", 0.5);
  Model<float> unet = load_checkpoint(f.checkpoint).model;
  const GrayImage img = read_gray(f.image);
  const MaskImage mask = unet_predict_mask(unet, img, threshold, cleanup);
  RunDir run(f.run_dir);
  const std::string stem = fs::path(f.image).stem().string();
  write_png(run.file("masks/" + stem + "_mask.png"), mask.to_gray());
  write_png(run.file("masks/" + stem + "_masked.png"), apply_mask(img, mask));
  run.write_json("metrics/segment.json", {{"image", absolute(f.image)}, {"foreground", mask.count()}, {"threshold", threshold}});
  run.finish();
  out << mask.count() << " foreground pixels\n";
  return kExitOk;
}

int cmd_explain(const Flags& f, std::ostream& out) {
  require_flag(f.checkpoint, "--checkpoint");
  require_flag(f.image, "--image");
  if (!f.cls) throw UsageError("--class is required");
  json doc = load_config(f);
  only_keys(doc, {"alpha", "layer", "regions"}, "explain");
  const double alpha = get<double>(doc, "alpha", 0.5);
  const std::string layer = f.layer.empty() ? get<std::string>(doc, "layer", "") : f.layer;
  std::vector<std::pair<std::string, Rect>> regions{{"corner_token", TokenSpec{}.rect()}};
  if (doc.contains("regions")) {
    regions.clear();
    for (const auto& r : doc.at("regions")) {
      only_keys(r, {"name", "x", "y", "width", "height"}, "region");
      regions.emplace_back(r.at("name").get<std::string>(),
                           Rect{r.at("x").get<std::size_t>(), r.at("y").get<std::size_t>(),
                                r.at("width").get<std::size_t>(), r.at("height").get<std::size_t>()});
    }
  }
  LoadedCheckpoint ck = load_checkpoint(f.checkpoint);
  const GrayImage img = read_gray(f.image);
  const GradCam cam = grad_cam(ck.model, image_to_tensor<float>(img), *f.cls, layer);
  RunDir run(f.run_dir);
  const std::string stem = fs::path(f.image).stem().string();
  write_png(run.file("heatmaps/" + stem + "_heatmap.png"), heatmap_to_gray(cam.heatmap));
  write_png(run.file("heatmaps/" + stem + "_overlay.png"), overlay(img, cam.heatmap, alpha));

  json entry{{"image", absolute(f.image)}, {"class", *f.cls}, {"layer", cam.layer}, {"score", cam.score}};
  for (const auto& [name, rect] : regions) entry["region_mass"][name] = region_mass(cam.heatmap, rect);
  const fs::path metrics = run.file("metrics/metrics.json");
  json all = json::object();
  if (fs::exists(metrics)) {
    std::ifstream in(metrics);
    all = json::parse(in, nullptr, false);
    if (!all.is_object()) all = json::object();
  }
  all["region_mass"].push_back(entry);
  run.write_json("metrics/metrics.json", all);
  run.finish();
  for (const auto& [name, rect] : regions) out << name << " region mass " << entry["region_mass"][name].get<double>() << '\n';
  return kExitOk;
}

int cmd_cascade(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  std::string manifest = get<std::string>(doc, "manifest", "");
  doc.erase("manifest");
  Cascade cascade = Cascade::load(CascadeConfig::from_json(doc));
  std::vector<std::pair<std::string, GrayImage>> inputs;
  std::vector<std::string> truths;
  if (!f.image.empty()) {
    inputs.emplace_back(f.image, read_gray(f.image));
  } else if (!manifest.empty()) {
    const DatasetManifest m = read_manifest(manifest);
    for (const auto& r : m.records) {
      if (r.split != display_split(f.split)) continue;
      inputs.emplace_back(r.path, read_gray(m.root / r.path));
      truths.push_back(r.label);
    }
  } else {
    throw UsageError("cascade needs --image or a manifest in the config");
  }
  RunDir run(f.run_dir);
  run.write_json("config.json", CascadeConfig::from_json(doc).to_json());
  json results = json::array();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CascadeResult r = cascade.predict(inputs[i].second, inputs[i].first);
    json leaves = json::object();
    for (const auto& [name, p] : r.leaves) leaves[name] = p;
    results.push_back({{"image", inputs[i].first},
                       {"label", r.label},
                       {"stage1", r.stage1},
                       {"stage2", r.stage2 ? json(*r.stage2) : json()},
                       {"leaves", leaves}});
    if (i < truths.size()) hits += truths[i] == r.label;
    run.log(cascade.log().back().to_json());
    if (!f.image.empty()) out << r.label << '\n';
  }
  json summary{{"predictions", results}};
  if (!truths.empty()) {
    summary["accuracy"] = static_cast<double>(hits) / static_cast<double>(truths.size());
    out << "accuracy " << summary["accuracy"].get<double>() << " over " << truths.size() << " images\n";
  }
  run.write_json("metrics/cascade.json", summary);
  run.finish();
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  only_keys(doc, {"seeds", "tolerance"}, "gradcheck");
  const std::size_t seeds = get<std::size_t>(doc, "seeds", 10);
  const double tol = get<double>(doc, "tolerance", 1e-3);
  json report = json::array();
  bool ok = true;
  for (OpId op : registered_ops()) {
    const GradCheckReport r = gradient_check(op, seeds, f.seed.value_or(0));
    const bool pass = r.passed(tol);
    ok = ok && pass;
    report.push_back({{"op", r.op}, {"trials", r.trials}, {"max_rel_error", r.max_error()}, {"passed", pass}});
    out << std::left << std::setw(24) << r.op << std::scientific << std::setprecision(2) << r.max_error()
        << (pass ? "  PASS" : "  FAIL") << '\n';
  }
  RunDir run(f.run_dir);
  run.write_json("metrics/gradcheck.json", {{"tolerance", tol}, {"seeds", seeds}, {"ops", report}});
  run.finish();
  if (!ok) throw TrainingError("gradient check failed");
  return kExitOk;
}

int cmd_analyze_dist(const Flags& f, std::ostream& out) {
  json doc = load_config(f);
  only_keys(doc, {"manifest", "split", "k", "seed", "hash_side", "max_iter", "init"}, "analyze-dist");
  const DatasetManifest m = read_manifest(required(doc, "manifest"));
  const std::string split_name = get<std::string>(doc, "split", "");
  KMeansOptions opt;
  opt.k = get<std::size_t>(doc, "k", m.class_names.size());
  opt.seed = f.seed.value_or(get<std::uint64_t>(doc, "seed", 0));
  opt.max_iter = get<std::size_t>(doc, "max_iter", opt.max_iter);
  const std::string init = get<std::string>(doc, "init", "plus_plus");
  if (init != "plus_plus" && init != "random") throw ConfigurationError("init must be plus_plus or random");
  opt.init = init == "random" ? KMeansInit::random : KMeansInit::plus_plus;
  const std::size_t side = get<std::size_t>(doc, "hash_side", 8);

  std::vector<const ManifestRecord*> recs;
  std::vector<std::vector<double>> points;
  for (const auto& r : m.records) {
    if (!split_name.empty() && r.split != split_name) continue;
    const HashBits bits = average_hash(read_gray(m.root / r.path), side);
    points.emplace_back(bits.begin(), bits.end());
    recs.push_back(&r);
  }
  if (points.empty()) throw InvalidInputError("no images selected");
  const KMeansResult km = kmeans(points, opt);
  RunDir run(f.run_dir);
  {
    std::ofstream csv(run.file("metrics/clusters.csv"));
    csv << "path,label,cluster\n";
    for (std::size_t i = 0; i < recs.size(); ++i) csv << recs[i]->path << ',' << recs[i]->label << ',' << km.assignment[i] << '\n';
  }
  std::vector<std::vector<std::size_t>> table(m.class_names.size(), std::vector<std::size_t>(opt.k, 0));
  for (std::size_t i = 0; i < recs.size(); ++i) ++table[static_cast<std::size_t>(m.label_index(recs[i]->label))][km.assignment[i]];
  std::size_t majority = 0;
  for (std::size_t c = 0; c < opt.k; ++c) {
    std::size_t best = 0;
    for (const auto& row : table) best = std::max(best, row[c]);
    majority += best;
  }
  const double purity = static_cast<double>(majority) / static_cast<double>(recs.size());
  run.write_json("metrics/distribution.json", {{"images", recs.size()},
                                               {"k", opt.k},
                                               {"class_names", m.class_names},
                                               {"class_by_cluster", table},
                                               {"purity", purity},
                                               {"objective", km.objective},
                                               {"converged", km.converged}});
  run.finish();
  out << recs.size() << " images, k=" << opt.k << ", purity " << purity << '\n';
  return kExitOk;
}

int cmd_ablate(const Flags& f, std::ostream& out) {
  AblationConfig cfg = AblationConfig::from_json(load_config(f));
  if (f.seed) cfg.train.seed = cfg.data.seed = *f.seed;
  RunDir run(f.run_dir);
  run.write_json("config.json", cfg.to_json());
  out << std::left << std::setw(18) << "variant" << std::setw(7) << "input" << std::setw(10) << "accuracy"
      << std::setw(10) << "macro_f1" << "macro_auc\n";
  json rows = json::array();
  run_ablation(cfg, [&](const AblationRow& r) {
    out << std::left << std::setw(18) << r.variant << std::setw(7) << r.input << std::fixed << std::setprecision(4)
        << std::setw(10) << r.accuracy << std::setw(10) << r.macro_f1;
    if (r.macro_auc) out << *r.macro_auc;
    out << '\n';
    rows.push_back(r.to_json());
    run.log({{"event", "ablation"}, {"row", r.to_json()}});
  });
  run.write_json("metrics/ablation.json", {{"rows", rows}});
  run.finish();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cascade-SEMEnet toolkit: synthetic data, training, evaluation and explanation"};
  app.require_subcommand(1);
  Flags f;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--seed", seed, "Seed override")->each([&](const std::string&) { f.seed = seed; });
    sub->add_option("--run-dir", f.run_dir, "Output directory")->capture_default_str();
    return sub;
  };
  auto* gen = add_common(app.add_subcommand("gen-data", "Generate a synthetic dataset"));
  auto* ing = add_common(app.add_subcommand("ingest", "Build a manifest from class directories"));
  ing->add_option("--root", f.root, "Dataset root with one directory per class");
  ing->add_flag("--skip-bad", f.skip_bad, "Skip undecodable files instead of aborting");
  auto* train = add_common(app.add_subcommand("train", "Train a classifier"));
  train->add_option("--checkpoint", f.checkpoint, "Resume from this checkpoint");
  auto* eval = add_common(app.add_subcommand("eval", "Evaluate a classifier"));
  eval->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
  eval->add_option("--split", f.split, "train, validation or test")->capture_default_str();
  auto* segtrain = add_common(app.add_subcommand("segment-train", "Train the lung-field U-Net"));
  auto* seg = add_common(app.add_subcommand("segment", "Predict a lung mask"));
  seg->add_option("--checkpoint", f.checkpoint, "U-Net checkpoint");
  seg->add_option("--image", f.image, "Input image");
  auto* expl = add_common(app.add_subcommand("explain", "Grad-CAM heatmap, overlay and region mass"));
  expl->add_option("--checkpoint", f.checkpoint, "Classifier checkpoint");
  expl->add_option("--image", f.image, "Input image");
  expl->add_option("--class", f.cls, "Target class index");
  expl->add_option("--layer", f.layer, "Feature layer (default: last conv stage)");
  auto* casc = add_common(app.add_subcommand("cascade", "Two-stage cascade prediction"));
  casc->add_option("--image", f.image, "Single input image");
  casc->add_option("--split", f.split, "Manifest split to run")->capture_default_str();
  auto* grad = add_common(app.add_subcommand("gradcheck", "Finite-difference check of every op"));
  auto* dist = add_common(app.add_subcommand("analyze-dist", "Average-hash + K-Means dataset analysis"));
  auto* abl = add_common(app.add_subcommand("ablate", "Backbone ablation on synthetic data"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(f, out);
    if (ing->parsed()) return cmd_ingest(f, out, err);
    if (train->parsed()) return cmd_train(f, out);
    if (eval->parsed()) return cmd_eval(f, out);
    if (segtrain->parsed()) return cmd_segment_train(f, out);
    if (seg->parsed()) return cmd_segment(f, out);
    if (expl->parsed()) return cmd_explain(f, out);
    if (casc->parsed()) return cmd_cascade(f, out);
    if (grad->parsed()) return cmd_gradcheck(f, out);
    if (dist->parsed()) return cmd_analyze_dist(f, out);
    if (abl->parsed()) return cmd_ablate(f, out);
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InvalidInputError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInvalid;
}

}  // namespace semenet
