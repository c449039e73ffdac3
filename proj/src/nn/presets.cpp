#include "semenet/nn/presets.hpp"

#include "semenet/error.hpp"

namespace semenet {

using nlohmann::json;

namespace {

LayerSpec layer(std::string kind, std::string name, json params = json::object(),
                std::vector<std::string> inputs = {}) {
  return LayerSpec{std::move(kind), std::move(name), std::move(params), std::move(inputs)};
}

void add_stem(ModelConfig& cfg, const BackboneOptions& opt) {
  cfg.layers.push_back(layer("conv", "stem", {{"out", opt.width}, {"k", 3}}));
  cfg.layers.push_back(layer("batchnorm", "stem_bn"));
  cfg.layers.push_back(layer("relu", "stem_relu"));
  if (opt.moex) cfg.layers.push_back(layer("moex", "moex"));
  cfg.layers.push_back(layer("pool", "stem_pool", {{"mode", "max"}, {"k", 2}}));
}

ModelConfig base_config(const BackboneOptions& opt, const std::string& name) {
  if (opt.input < 16 || opt.input % 16 != 0) throw ConfigurationError("backbone input side must be a multiple of 16");
  ModelConfig cfg;
  cfg.name = name;
  cfg.task = Task::classify;
  cfg.input = {opt.channels, opt.input, opt.input};
  cfg.classes = opt.classes;
  return cfg;
}

void add_head(ModelConfig& cfg, const BackboneOptions& opt) {
  if (opt.gap_head) cfg.layers.push_back(layer("gap", "gap"));
  cfg.layers.push_back(layer("dense", "head", {{"out", opt.classes}}));
}

}  // namespace

ModelConfig mini_resnet(const BackboneOptions& opt, const std::string& name) {
  ModelConfig cfg = base_config(opt, name);
  add_stem(cfg, opt);
  for (std::size_t stage = 1; stage <= 3; ++stage) {
    json p{{"out", opt.width << stage}, {"stride", 2}};
    if (opt.se) {
      p["se"] = true;
      p["r"] = opt.se_reduction;
    }
    cfg.layers.push_back(layer("residual_block", "block" + std::to_string(stage), p));
  }
  add_head(cfg, opt);
  return cfg;
}

ModelConfig mini_densenet(const BackboneOptions& opt, const std::string& name) {
  ModelConfig cfg = base_config(opt, name);
  add_stem(cfg, opt);
  for (std::size_t stage = 1; stage <= 3; ++stage) {
    json p{{"growth", opt.width}, {"layers", 2}, {"out", opt.width << stage}, {"pool", true}};
    if (opt.se) {
      p["se"] = true;
      p["r"] = opt.se_reduction;
    }
    cfg.layers.push_back(layer("dense_block", "dense" + std::to_string(stage), p));
  }
  cfg.layers.push_back(layer("batchnorm", "final_bn"));
  cfg.layers.push_back(layer("relu", "final_relu"));
  add_head(cfg, opt);
  return cfg;
}

ModelConfig unet_toy(std::size_t input, std::size_t width) {
  if (input < 4 || input % 4 != 0) throw ConfigurationError("U-Net input side must be a multiple of 4");
  ModelConfig cfg;
  cfg.name = "unet-toy";
  cfg.task = Task::segment;
  cfg.input = {1, input, input};
  cfg.classes = 1;
  auto conv_bn_relu = [&](const std::string& name, std::size_t out) {
    cfg.layers.push_back(layer("conv", name, {{"out", out}, {"k", 3}}));
    cfg.layers.push_back(layer("batchnorm", name + "_bn"));
    cfg.layers.push_back(layer("relu", name + "_relu"));
  };
  conv_bn_relu("enc1a", width);
  conv_bn_relu("enc1b", width);
  cfg.layers.push_back(layer("pool", "pool1"));
  conv_bn_relu("enc2a", 2 * width);
  conv_bn_relu("enc2b", 2 * width);
  cfg.layers.push_back(layer("pool", "pool2"));
  conv_bn_relu("mid_a", 4 * width);
  conv_bn_relu("mid_b", 4 * width);
  cfg.layers.push_back(layer("upsample_concat", "up2", json::object(), {"enc2b_relu"}));
  conv_bn_relu("dec2a", 2 * width);
  conv_bn_relu("dec2b", 2 * width);
  cfg.layers.push_back(layer("upsample_concat", "up1", json::object(), {"enc1b_relu"}));
  conv_bn_relu("dec1a", width);
  conv_bn_relu("dec1b", width);
  cfg.layers.push_back(layer("conv", "mask_head", {{"out", 1}, {"k", 1}, {"bias", true}}));
  return cfg;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"mini-seme", "mini-res", "mini-dense", "unet-toy"};
  return names;
}

ModelConfig preset_config(const std::string& name, std::size_t input, std::size_t classes) {
  BackboneOptions opt;
  opt.input = input;
  opt.classes = classes;
  if (name == "mini-seme") return mini_resnet(opt, name);
  if (name == "mini-res") {
    opt.se = false;
    opt.moex = false;
    return mini_resnet(opt, name);
  }
  if (name == "mini-dense") {
    opt.moex = false;
    return mini_densenet(opt, name);
  }
  if (name == "unet-toy") return unet_toy(input);
  throw ConfigurationError("unknown preset '" + name + "'");
}

}  // namespace semenet
