#include "ufnd/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "ufnd/kv_config.hpp"

namespace ufnd {

namespace {

constexpr char kMagic[4] = {'U', 'F', 'N', 'D'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large regions in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

static_assert(sizeof(float) == 4, "f32 payloads assume 4-byte floats");

void append_f32(std::vector<char>& out, const Tensor& t) {
  for (float f : t.values()) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt) {
  using nlohmann::json;
  KvConfig kv;
  write_config(kv, ckpt.model);
  write_config(kv, ckpt.train);

  json header;
  header["config"] = kv.entries();
  header["vocab_hash"] = ckpt.vocab_hash;
  header["config_hash"] = ckpt.config_hash;
  header["adam_step"] = ckpt.adam_step;
  header["epoch"] = ckpt.epoch;
  header["best_epoch"] = ckpt.best_epoch;
  header["best_val_accuracy"] = ckpt.best_val_accuracy;
  header["dropout_rng"] = {{"seed", ckpt.dropout_rng.seed},
                           {"stream_key", ckpt.dropout_rng.stream_key},
                           {"position", ckpt.dropout_rng.position}};
  header["rng_algorithm"] = std::string(Rng::algorithm);
  json dir = json::array();
  std::size_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    dir.push_back({{"name", t.name}, {"dtype", "f32"}, {"shape", t.tensor.shape()}, {"offset", offset}});
    offset += t.tensor.size() * 4;
  }
  header["tensors"] = dir;
  const std::string text = header.dump();

  std::vector<char> out(kMagic, kMagic + 4);
  put_u32(out, Checkpoint::format_version);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  const std::size_t covered_from = out.size();
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset + 4);
  for (const auto& t : ckpt.tensors) append_f32(out, t.tensor);
  put_u32(out, crc_of(out.data() + covered_from, out.size() - covered_from));
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<char>& bytes) {
  using nlohmann::json;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointIntegrityError("not a checkpoint file (bad magic or too short)");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != Checkpoint::format_version) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(Checkpoint::format_version) + ")");
  }
  const std::size_t header_len = get_u32(bytes, 8);
  if (bytes.size() < 12 + header_len + 4) throw CheckpointIntegrityError("checkpoint is truncated");
  const std::size_t body_end = bytes.size() - 4;
  const std::uint32_t stored = get_u32(bytes, body_end);
  if (crc_of(bytes.data() + 12, body_end - 12) != stored) {
    throw CheckpointIntegrityError("checkpoint checksum mismatch");
  }

  json header;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw CheckpointIntegrityError(std::string("unreadable checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    KvConfig kv;
    for (const auto& [k, v] : header.at("config").items()) kv.set(k, v.get<std::string>());
    ckpt.model = read_model_config(kv);
    ckpt.train = read_train_config(kv);
    ckpt.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();
    ckpt.config_hash = header.at("config_hash").get<std::string>();
    ckpt.adam_step = header.at("adam_step").get<std::uint64_t>();
    ckpt.epoch = header.at("epoch").get<std::size_t>();
    ckpt.best_epoch = header.at("best_epoch").get<std::size_t>();
    ckpt.best_val_accuracy = header.at("best_val_accuracy").get<double>();
    const auto& r = header.at("dropout_rng");
    ckpt.dropout_rng = {r.at("seed").get<std::uint64_t>(), r.at("stream_key").get<std::uint64_t>(),
                        r.at("position").get<std::uint64_t>()};

    const std::size_t payload = 12 + header_len;
    for (const auto& entry : header.at("tensors")) {
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw CheckpointIntegrityError("unsupported tensor dtype in checkpoint");
      }
      Shape shape = entry.at("shape").get<Shape>();
      const std::size_t off = entry.at("offset").get<std::size_t>();
      Tensor t(shape);
      if (payload + off + t.size() * 4 > body_end) {
        throw CheckpointIntegrityError("tensor '" + entry.at("name").get<std::string>() +
                                       "' runs past the payload");
      }
      auto vals = t.values();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const std::uint32_t bits = get_u32(bytes, payload + off + 4 * i);
        std::memcpy(&vals[i], &bits, 4);
      }
      ckpt.tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
    }
  } catch (const json::exception& e) {
    throw CheckpointIntegrityError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointIntegrityError(std::string("malformed checkpoint config: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Checkpoint capture_state(Model<float>& model, const Adam<float>* adam) {
  Checkpoint ckpt;
  ckpt.model = model.config();
  for (auto& [name, t] : model.state_tensors()) ckpt.tensors.push_back({name, *t});
  if (adam) {
    const auto params = adam->params();
    const auto& states = adam->states();
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.tensors.push_back({"adam.m." + params[i]->name, states[i].m});
      ckpt.tensors.push_back({"adam.v." + params[i]->name, states[i].v});
    }
    ckpt.adam_step = states.empty() ? 0 : states.front().t;
  }
  return ckpt;
}

namespace {

void copy_into(const Checkpoint& ckpt, const std::string& name, Tensor& dst) {
  const auto* src = ckpt.find(name);
  if (!src) throw CheckpointError("checkpoint has no tensor '" + name + "'");
  if (src->tensor.shape() != dst.shape()) {
    throw CheckpointError("shape mismatch for '" + name + "': checkpoint " +
                          shape_string(src->tensor.shape()) + ", model " + shape_string(dst.shape()));
  }
  dst = src->tensor;
}

}  // namespace

void restore_state(Model<float>& model, Adam<float>* adam, const Checkpoint& ckpt) {
  for (auto& [name, t] : model.state_tensors()) copy_into(ckpt, name, *t);
  if (adam) {
    const auto params = adam->params();
    auto& states = adam->states();
    for (std::size_t i = 0; i < params.size(); ++i) {
      copy_into(ckpt, "adam.m." + params[i]->name, states[i].m);
      copy_into(ckpt, "adam.v." + params[i]->name, states[i].v);
      states[i].t = ckpt.adam_step;
    }
  }
}

}  // namespace ufnd
