#include "semenet/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "semenet/error.hpp"

namespace semenet {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

class Writer {
 public:
  template <typename V>
  void put(V v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(V));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void blob(const std::string& name, const Tensor<float>& t) {
    put(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    put(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put(static_cast<std::uint64_t>(d));
    bytes(t.data().data(), t.size() * sizeof(float));
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  template <typename V>
  V get() {
    V v;
    std::memcpy(&v, take(sizeof(V)), sizeof(V));
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > n_ - pos_) throw CheckpointError("malformed checkpoint: record runs past the end");
    const std::uint8_t* out = p_ + pos_;
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == n_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

json history_json(const std::vector<EpochRecord>& history) {
  json out = json::array();
  for (const auto& r : history) {
    json rec = r.to_json();
    rec.erase("wall_ms");  // timings would make identical runs differ byte-wise
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const TrainState* state,
                     const json& train_config, const json& info) {
  json meta{{"format", "semenet-checkpoint"},
            {"model", model.config().to_json()},
            {"train_config", train_config},
            {"info", info}};
  if (state) {
    meta["state"] = {{"epoch", state->epoch},
                     {"optimizer_step", state->optimizer.step},
                     {"history", history_json(state->history)},
                     {"best_metric", state->best_metric},
                     {"best_epoch", state->best_epoch}};
    // Per-sample RNG streams are derived from (seed, epoch, index), so
    // the seed and the epoch counter are the whole RNG state.
    if (train_config.is_object() && train_config.contains("seed")) {
      meta["state"]["rng"] = {{"seed", train_config["seed"]}, {"next_epoch", state->epoch}};
    }
  }

  Writer w;
  w.bytes("SEMN", 4);
  w.put(kCheckpointVersion);
  const std::string meta_text = meta.dump();
  w.put(static_cast<std::uint64_t>(meta_text.size()));
  w.bytes(meta_text.data(), meta_text.size());

  const auto params = model.parameters();
  std::uint32_t count = static_cast<std::uint32_t>(params.size());
  if (state) count += static_cast<std::uint32_t>(state->optimizer.first.size() + state->optimizer.second.size());
  w.put(count);
  for (const auto* p : params) w.blob("param/" + p->name, p->value);
  if (state) {
    std::vector<const Parameter<float>*> trainable;
    for (const auto* p : params)
      if (p->trainable) trainable.push_back(p);
    if (state->optimizer.first.size() != trainable.size()) {
      throw CheckpointError("optimizer state does not match the model's trainable parameters");
    }
    for (std::size_t i = 0; i < state->optimizer.first.size(); ++i) {
      w.blob("opt.first/" + trainable[i]->name, state->optimizer.first[i]);
    }
    for (std::size_t i = 0; i < state->optimizer.second.size(); ++i) {
      w.blob("opt.second/" + trainable[i]->name, state->optimizer.second[i]);
    }
  }
  auto& buf = w.buffer();
  w.put(fnv1a64(buf.data(), buf.size()));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), {});
  const std::string where = path.string() + ": ";
  if (buf.size() < 8 || std::memcmp(buf.data(), "SEMN", 4) != 0) throw CheckpointError(where + "bad magic, not a checkpoint");
  std::uint32_t version;
  std::memcpy(&version, buf.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(where + "version mismatch: file has " + std::to_string(version) + ", reader supports " +
                          std::to_string(kCheckpointVersion));
  }
  if (buf.size() < 16 + 8) throw CheckpointError(where + "digest mismatch: file is truncated");
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  if (fnv1a64(buf.data(), buf.size() - 8) != stored) {
    throw CheckpointError(where + "digest mismatch: file is truncated or corrupted");
  }

  Reader r(buf.data() + 8, buf.size() - 16);
  json meta;
  std::map<std::string, Tensor<float>> blobs;
  try {
    const auto meta_len = r.get<std::uint64_t>();
    const auto* text = reinterpret_cast<const char*>(r.take(meta_len));
    meta = json::parse(text, text + meta_len);
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto name_len = r.get<std::uint32_t>();
      const auto* name = reinterpret_cast<const char*>(r.take(name_len));
      const auto rank = r.get<std::uint32_t>();
      Shape shape(rank);
      for (auto& d : shape) d = r.get<std::uint64_t>();
      Tensor<float> t(shape);
      std::memcpy(t.data().data(), r.take(t.size() * sizeof(float)), t.size() * sizeof(float));
      blobs.emplace(std::string(name, name_len), std::move(t));
    }
    if (!r.done()) throw CheckpointError("trailing bytes after the last blob");
  } catch (const json::exception& e) {
    throw CheckpointError(where + "malformed metadata: " + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(where + e.what());
  }

  try {
    LoadedCheckpoint out{Model<float>(ModelConfig::from_json(meta.at("model"))), std::nullopt, meta.at("train_config"),
                         meta.value("info", json())};
    auto take_blob = [&](const std::string& name, const Shape& shape) {
      auto it = blobs.find(name);
      if (it == blobs.end()) throw CheckpointError(where + "missing blob '" + name + "'");
      if (it->second.shape() != shape) throw CheckpointError(where + "blob '" + name + "' has the wrong shape");
      return it->second;
    };
    std::vector<Parameter<float>*> trainable;
    for (auto* p : out.model.parameters()) {
      p->value = take_blob("param/" + p->name, p->value.shape());
      if (p->trainable) trainable.push_back(p);
    }
    if (meta.contains("state")) {
      const json& s = meta.at("state");
      TrainState st;
      st.epoch = s.at("epoch").get<std::size_t>();
      st.optimizer.step = s.at("optimizer_step").get<std::uint64_t>();
      for (const auto& rec : s.at("history")) st.history.push_back(EpochRecord::from_json(rec));
      st.best_metric = s.at("best_metric").is_null() ? -std::numeric_limits<double>::infinity()
                                                     : s.at("best_metric").get<double>();
      st.best_epoch = s.at("best_epoch").get<std::size_t>();
      for (auto* p : trainable) {
        st.optimizer.first.push_back(take_blob("opt.first/" + p->name, p->value.shape()));
        if (blobs.count("opt.second/" + p->name)) {
          st.optimizer.second.push_back(take_blob("opt.second/" + p->name, p->value.shape()));
        }
      }
      out.state = std::move(st);
    }
    return out;
  } catch (const ConfigurationError& e) {
    throw CheckpointError(where + "stored model config is invalid: " + e.what());
  } catch (const json::exception& e) {
    throw CheckpointError(where + "malformed metadata: " + e.what());
  }
}

}  // namespace semenet
