#include "semenet/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "semenet/error.hpp"
#include "semenet/eval/metrics.hpp"
#include "semenet/nn/segment.hpp"
#include "semenet/rng.hpp"
#include "semenet/train/loss.hpp"

namespace semenet {

using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kMoexStream = 0x30e;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigurationError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigurationError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename V>
void read(const json& obj, const char* key, V& out) {
  if (obj.contains(key)) out = obj.at(key).get<V>();
}

}  // namespace

// ---- configuration ----

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigurationError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigurationError("batch size must be >= 1");
  if (moex && batch_size < 2) throw ConfigurationError("MoEx needs a batch size of at least 2");
  if (!(augment.rotation_deg >= 0 && augment.rotation_deg <= 180)) {
    throw ConfigurationError("rotation amplitude must lie in [0, 180] degrees");
  }
  if (!(augment.clahe_fraction >= 0 && augment.clahe_fraction <= 1)) {
    throw ConfigurationError("CLAHE fraction must lie in [0, 1]");
  }
  schedule.validate();
}

TrainConfig TrainConfig::from_json(const json& doc) {
  TrainConfig cfg;
  try {
    reject_unknown(doc, {"epochs", "batch_size", "seed", "optimizer", "schedule", "augment", "moex"}, "train config");
    read(doc, "epochs", cfg.epochs);
    read(doc, "batch_size", cfg.batch_size);
    read(doc, "seed", cfg.seed);
    read(doc, "moex", cfg.moex);
    if (doc.contains("optimizer")) {
      const json& o = doc.at("optimizer");
      reject_unknown(o, {"kind", "lr", "momentum", "beta1", "beta2", "eps", "weight_decay"}, "optimizer");
      const std::string kind = o.value("kind", std::string("sgd"));
      if (kind != "sgd" && kind != "adam") throw ConfigurationError("optimizer kind must be 'sgd' or 'adam'");
      cfg.optimizer.kind = kind == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
      read(o, "lr", cfg.optimizer.lr);
      read(o, "momentum", cfg.optimizer.momentum);
      read(o, "beta1", cfg.optimizer.beta1);
      read(o, "beta2", cfg.optimizer.beta2);
      read(o, "eps", cfg.optimizer.eps);
      read(o, "weight_decay", cfg.optimizer.weight_decay);
    }
    if (doc.contains("schedule")) {
      const json& s = doc.at("schedule");
      reject_unknown(s, {"kind", "eta_max", "eta_min", "cycle", "restart_mult"}, "schedule");
      const std::string kind = s.value("kind", std::string("constant"));
      if (kind != "constant" && kind != "cosine") throw ConfigurationError("schedule kind must be 'constant' or 'cosine'");
      cfg.schedule.kind = kind == "constant" ? ScheduleKind::constant : ScheduleKind::cosine;
      read(s, "eta_max", cfg.schedule.eta_max);
      read(s, "eta_min", cfg.schedule.eta_min);
      read(s, "cycle", cfg.schedule.cycle);
      read(s, "restart_mult", cfg.schedule.restart_mult);
    }
    if (doc.contains("augment")) {
      const json& a = doc.at("augment");
      reject_unknown(a, {"rotation_deg", "clahe_fraction", "clahe_mode", "clahe"}, "augment");
      read(a, "rotation_deg", cfg.augment.rotation_deg);
      read(a, "clahe_fraction", cfg.augment.clahe_fraction);
      const std::string mode = a.value("clahe_mode", std::string("per_epoch"));
      if (mode != "per_epoch" && mode != "offline") throw ConfigurationError("clahe_mode must be 'per_epoch' or 'offline'");
      cfg.augment.clahe_mode = mode == "offline" ? ClaheMode::offline : ClaheMode::per_epoch;
      if (a.contains("clahe")) {
        const json& c = a.at("clahe");
        reject_unknown(c, {"tiles_x", "tiles_y", "clip_limit"}, "clahe");
        read(c, "tiles_x", cfg.augment.clahe.tiles_x);
        read(c, "tiles_y", cfg.augment.clahe.tiles_y);
        read(c, "clip_limit", cfg.augment.clahe.clip_limit);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json TrainConfig::to_json() const {
  return json{
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"seed", seed},
      {"moex", moex},
      {"optimizer",
       {{"kind", optimizer.kind == OptimizerKind::sgd ? "sgd" : "adam"},
        {"lr", optimizer.lr},
        {"momentum", optimizer.momentum},
        {"beta1", optimizer.beta1},
        {"beta2", optimizer.beta2},
        {"eps", optimizer.eps},
        {"weight_decay", optimizer.weight_decay}}},
      {"schedule",
       {{"kind", schedule.kind == ScheduleKind::constant ? "constant" : "cosine"},
        {"eta_max", schedule.eta_max},
        {"eta_min", schedule.eta_min},
        {"cycle", schedule.cycle},
        {"restart_mult", schedule.restart_mult}}},
      {"augment",
       {{"rotation_deg", augment.rotation_deg},
        {"clahe_fraction", augment.clahe_fraction},
        {"clahe_mode", augment.clahe_mode == ClaheMode::offline ? "offline" : "per_epoch"},
        {"clahe",
         {{"tiles_x", augment.clahe.tiles_x},
          {"tiles_y", augment.clahe.tiles_y},
          {"clip_limit", augment.clahe.clip_limit}}}}}};
}

json EpochRecord::to_json() const {
  json doc{{"epoch", epoch}, {"lr", lr}, {"train_loss", train_loss}, {"val_acc", val_acc}, {"wall_ms", wall_ms}};
  if (val_iou) doc["val_iou"] = *val_iou;
  return doc;
}

EpochRecord EpochRecord::from_json(const json& doc) {
  EpochRecord r;
  r.epoch = doc.at("epoch").get<std::size_t>();
  r.lr = doc.at("lr").get<double>();
  r.train_loss = doc.at("train_loss").get<double>();
  r.val_acc = doc.at("val_acc").get<double>();
  r.wall_ms = doc.value("wall_ms", 0.0);
  if (doc.contains("val_iou")) r.val_iou = doc.at("val_iou").get<double>();
  return r;
}

bool EpochRecord::same_result(const EpochRecord& o) const {
  return epoch == o.epoch && lr == o.lr && train_loss == o.train_loss && val_acc == o.val_acc && val_iou == o.val_iou;
}

// ---- inference helpers ----

Tensor<double> predict_probabilities(Model<float>& model, const std::vector<GrayImage>& images, std::size_t batch_size) {
  if (images.empty()) throw InvalidInputError("no images to classify");
  const std::size_t k = model.config().classes;
  Tensor<double> out({images.size(), k});
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t end = std::min(images.size(), start + batch_size);
    std::vector<const GrayImage*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&images[i]);
    const Tensor<double> probs = ops::softmax(model.predict(images_to_tensor<float>(batch)).cast<double>());
    std::copy(probs.data().begin(), probs.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(start * k));
  }
  return out;
}

std::vector<int> predict_labels(Model<float>& model, const std::vector<GrayImage>& images, std::size_t batch_size) {
  const Tensor<double> probs = predict_probabilities(model, images, batch_size);
  const std::size_t k = probs.dim(1);
  std::vector<int> out(probs.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = probs.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<Tensor<float>> snapshot(const Model<float>& model) {
  std::vector<Tensor<float>> out;
  for (const auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(Model<float>& model, const std::vector<Tensor<float>>& values) {
  auto params = model.parameters();
  if (params.size() != values.size()) throw UsageError("snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != values[i].shape()) throw UsageError("snapshot shape mismatch at " + params[i]->name);
    params[i]->value = values[i];
  }
}

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : history) {
    json doc = r.to_json();
    doc.erase("wall_ms");  // timing lives in the run log, so reruns compare equal
    out << doc.dump() << '\n';
  }
}

// ---- training loop ----

namespace {

struct EvalResult {
  double acc = 0;
  std::optional<double> iou;
};

EvalResult validate_model(Model<float>& model, const Dataset& val, std::size_t batch_size) {
  EvalResult r;
  if (model.config().task == Task::classify) {
    const auto preds = predict_labels(model, val.images, batch_size);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == val.labels[i];
    r.acc = static_cast<double>(hits) / static_cast<double>(preds.size());
    return r;
  }
  double iou = 0;
  std::uint64_t hits = 0, pixels = 0;
  for (std::size_t start = 0; start < val.size(); start += batch_size) {
    const std::size_t end = std::min(val.size(), start + batch_size);
    std::vector<const GrayImage*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&val.images[i]);
    const Tensor<float> logits = model.predict(images_to_tensor<float>(batch));
    const std::size_t plane = val.images[start].size();
    for (std::size_t i = start; i < end; ++i) {
      std::vector<std::uint8_t> bits(plane);
      for (std::size_t p = 0; p < plane; ++p) {
        bits[p] = logits[(i - start) * plane + p] >= 0.0f ? 1 : 0;
        hits += bits[p] == val.masks[i].samples()[p];
      }
      pixels += plane;
      iou += mean_iou(MaskImage(val.images[i].width(), val.images[i].height(), std::move(bits)), val.masks[i]);
    }
  }
  r.acc = static_cast<double>(hits) / static_cast<double>(pixels);
  r.iou = iou / static_cast<double>(val.size());
  return r;
}

}  // namespace

TrainState fit(Model<float>& model, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
               std::optional<TrainState> resume, const FitHooks& hooks) {
  cfg.validate();
  if (train.split == "test" || val.split == "test") throw UsageError("training must not read the test split");
  train.validate();
  val.validate();
  if (train.size() == 0 || val.size() == 0) throw InvalidInputError("train and validation splits must be nonempty");
  const bool classify = model.config().task == Task::classify;
  const std::size_t classes = model.config().classes;
  if (classify) {
    if (train.labels.size() != train.size() || val.labels.size() != val.size()) {
      throw InvalidInputError("classification training needs a label per image");
    }
    std::vector<std::size_t> seen(classes, 0);
    for (int l : train.labels) {
      if (static_cast<std::size_t>(l) >= classes) throw InvalidInputError("train label exceeds the model's classes");
      ++seen[static_cast<std::size_t>(l)];
    }
    for (std::size_t c = 0; c < classes; ++c) {
      if (!seen[c]) {
        const std::string name = c < train.class_names.size() ? train.class_names[c] : std::to_string(c);
        throw TrainingError("class '" + name + "' has no training samples and cannot be learned");
      }
    }
  } else if (!train.has_masks() || !val.has_masks()) {
    throw InvalidInputError("segmentation training needs a mask per image");
  }

  Dataset data = train;
  if (cfg.augment.clahe_mode == ClaheMode::offline && cfg.augment.clahe_fraction > 0) {
    apply_offline_clahe(data, cfg.augment, cfg.seed);
  }
  AugmentConfig online = cfg.augment;
  if (online.clahe_mode == ClaheMode::offline) online.clahe_fraction = 0;

  Optimizer<float> optimizer(cfg.optimizer, model.trainable_parameters());
  TrainState state = resume.value_or(TrainState{});
  if (resume) {
    if (state.optimizer.first.size() != optimizer.state().first.size() ||
        state.optimizer.second.size() != optimizer.state().second.size()) {
      throw CheckpointError("optimizer state does not match the model and optimizer kind");
    }
    optimizer.state() = state.optimizer;
  }
  const MoexSpec* moex = classify && cfg.moex ? model.moex() : nullptr;

  const std::size_t n = data.size();
  const std::size_t steps = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total_steps = static_cast<std::uint64_t>(steps) * cfg.epochs;
  auto lr_at = [&](std::uint64_t t) {
    return cfg.schedule.kind == ScheduleKind::constant ? cfg.optimizer.lr : scheduled_lr(t, total_steps, cfg.schedule);
  };

  for (std::size_t epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = make_rng(cfg.seed, {kShuffleStream, epoch});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);

    double loss_sum = 0;
    for (std::size_t b = 0; b < steps; ++b) {
      const std::size_t start = b * cfg.batch_size, end = std::min(n, start + cfg.batch_size);
      std::vector<GrayImage> images;
      std::vector<MaskImage> masks;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        images.push_back(data.images[idx]);
        MaskImage* mask = nullptr;
        if (!classify) mask = &masks.emplace_back(data.masks[idx]);
        if (classify) labels.push_back(data.labels[idx]);
        augment_sample(images.back(), mask, online, cfg.seed, epoch, idx);
      }
      std::vector<const GrayImage*> ptrs;
      for (const auto& img : images) ptrs.push_back(&img);

      Graph<float> g;
      ForwardOptions<float> fo;
      fo.training = true;
      std::vector<std::size_t> partner;
      double lambda = 1.0;
      if (moex && images.size() >= 2) {
        Rng rng = make_rng(cfg.seed, {kMoexStream, epoch, b});
        if (uniform01(rng) < moex->probability) {
          partner = moex_partners(labels, rng);
          lambda = sample_lambda(*moex, rng);
          fo.moex_partner = partner;
        }
      }
      Var<float> out = model.forward(g, g.constant(images_to_tensor<float>(ptrs)), fo);
      Var<float> loss;
      if (classify) {
        std::vector<int> partner_labels(labels);
        for (std::size_t i = 0; i < partner.size(); ++i) partner_labels[i] = labels[partner[i]];
        loss = moex_loss(out, labels, partner_labels, lambda);
      } else {
        Tensor<float> target(out.shape());
        const std::size_t plane = images[0].size();
        for (std::size_t i = 0; i < masks.size(); ++i)
          for (std::size_t p = 0; p < plane; ++p) target[i * plane + p] = masks[i].samples()[p];
        loss = ops::sigmoid_bce(out, target);
      }
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(b));
      }
      model.zero_grad();
      g.backward(loss);
      optimizer.step(lr_at(static_cast<std::uint64_t>(epoch) * steps + b));
      loss_sum += loss_value * static_cast<double>(end - start);
    }

    const EvalResult ev = validate_model(model, val, 32);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr_at(static_cast<std::uint64_t>(epoch) * steps);
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.val_acc = ev.acc;
    rec.val_iou = ev.iou;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    state.history.push_back(rec);
    state.epoch = epoch + 1;
    state.optimizer = optimizer.state();
    const double metric = classify ? ev.acc : *ev.iou;
    if (metric > state.best_metric) {
      state.best_metric = metric;
      state.best_epoch = epoch + 1;
      if (hooks.on_best) hooks.on_best(model, state);
    }
    if (hooks.on_epoch) hooks.on_epoch(model, state);
  }
  return state;
}

}  // namespace semenet
