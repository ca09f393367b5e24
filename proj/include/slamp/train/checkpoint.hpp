#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/io/binary.hpp"
#include "slamp/model/video_model.hpp"
#include "slamp/train/adam.hpp"

// Layout: 8-byte magic, u32 format version, u64 header length, JSON header,
// then little-endian float32 blobs in the order listed by header["tensors"].

namespace slamp {

inline constexpr char kCheckpointMagic[8] = {'S', 'L', 'M', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::string role;  // "param", "adam_m" or "adam_v"
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  ModelConfig model;
  std::int64_t step = 0;
  AdamConfig optimizer;
  std::int64_t optimizer_steps = 0;
  nlohmann::json extra = nlohmann::json::object();  // e.g. best validation score, code hash
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name, const std::string& role) const {
    for (const auto& t : tensors)
      if (t.name == name && t.role == role) return &t;
    return nullptr;
  }
};

template <class T>
Checkpoint make_checkpoint(const VideoModel<T>& model, const Adam<T>* opt, std::int64_t step,
                           nlohmann::json extra = nlohmann::json::object()) {
  Checkpoint c;
  c.model = model.config();
  c.step = step;
  c.extra = std::move(extra);
  const auto& params = model.parameters();
  auto add = [&](const std::string& name, const char* role, const Tensor<T>& t) {
    CheckpointTensor ct{name, role, t.shape(), {}};
    ct.values.reserve(t.size());
    for (T v : t.values()) ct.values.push_back(static_cast<float>(v));
    c.tensors.push_back(std::move(ct));
  };
  for (std::size_t i = 0; i < params.size(); ++i) add(params.names()[i], "param", params.vars()[i].value());
  if (opt) {
    c.optimizer = opt->config();
    c.optimizer_steps = opt->steps();
    for (std::size_t i = 0; i < params.size(); ++i) {
      add(params.names()[i], "adam_m", opt->first_moments()[i]);
      add(params.names()[i], "adam_v", opt->second_moments()[i]);
    }
  }
  return c;
}

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  nlohmann::json h;
  h["format_version"] = c.format_version;
  h["model_config"] = c.model;
  h["step"] = c.step;
  h["optimizer"] = {{"config", c.optimizer}, {"steps", c.optimizer_steps}};
  h["extra"] = c.extra;
  h["tensors"] = nlohmann::json::array();
  for (const auto& t : c.tensors) h["tensors"].push_back({{"name", t.name}, {"role", t.role}, {"shape", t.shape}});
  const std::string header = h.dump();
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  binary::put_u32(out, c.format_version);
  binary::put_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  for (const auto& t : c.tensors) binary::put_f32(out, t.values.begin(), t.values.end());
  return out;
}

inline Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t prefix = sizeof(kCheckpointMagic) + 4 + 8;
  if (bytes.size() < prefix || std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw FormatError("not a checkpoint (bad magic)");
  const std::uint32_t version = binary::get_u32(bytes.data() + 8);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint format_version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  const std::uint64_t header_len = binary::get_u64(bytes.data() + 12);
  if (bytes.size() - prefix < header_len) throw LengthError("checkpoint header truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.begin() + prefix, bytes.begin() + static_cast<std::ptrdiff_t>(prefix + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (h.value("format_version", 0u) != kCheckpointVersion) throw CheckpointError("checkpoint header version mismatch");
  Checkpoint c;
  c.format_version = version;
  c.model = h.at("model_config").get<ModelConfig>();
  c.step = h.at("step").get<std::int64_t>();
  c.optimizer = h.at("optimizer").at("config").get<AdamConfig>();
  c.optimizer_steps = h.at("optimizer").at("steps").get<std::int64_t>();
  c.extra = h.value("extra", nlohmann::json::object());
  std::size_t pos = prefix + header_len;
  for (const auto& jt : h.at("tensors")) {
    CheckpointTensor t{jt.at("name"), jt.at("role"), jt.at("shape").get<Shape>(), {}};
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    if (bytes.size() - pos < 4 * n) throw LengthError("checkpoint tensor " + t.name + " truncated");
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) t.values[k] = binary::get_f32(bytes.data() + pos + 4 * k);
    pos += 4 * n;
    c.tensors.push_back(std::move(t));
  }
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  // Write-then-rename so an interrupted save never leaves a torn file.
  const std::string tmp = path + ".tmp";
  binary::write_file(tmp, serialize_checkpoint(c));
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw WriteError("cannot move checkpoint into " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(binary::read_file(path)); }

namespace detail {

template <class T>
void restore_tensor(Tensor<T>& dst, const CheckpointTensor* src, const std::string& name, const char* role) {
  if (!src) throw CheckpointError("checkpoint lacks " + std::string(role) + " for " + name);
  if (src->shape != dst.shape())
    throw CheckpointError("checkpoint " + std::string(role) + " " + name + " has shape " + shape_str(src->shape) +
                          ", model expects " + shape_str(dst.shape()));
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(src->values[k]);
}

}  // namespace detail

/// Copies parameters (and optimizer state when `opt` is given) into a model
/// built from a matching config. Any layout difference is a CheckpointError.
template <class T>
void restore_checkpoint(const Checkpoint& c, VideoModel<T>& model, Adam<T>* opt = nullptr) {
  // Loss weights may change between runs; everything else defines the layout.
  auto layout = [](const ModelConfig& m) {
    nlohmann::json j = m;
    for (const char* k : {"beta", "recon", "likelihood"}) j.erase(k);
    return j;
  };
  if (layout(c.model) != layout(model.config()))
    throw CheckpointError("checkpoint model config differs from the requested model");
  auto& params = model.parameters();
  std::size_t stored = 0;
  for (const auto& t : c.tensors) stored += t.role == "param";
  if (stored != params.size())
    throw CheckpointError("checkpoint has " + std::to_string(stored) + " parameter tensors, model has " +
                          std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    detail::restore_tensor(params.vars()[i].mutable_value(), c.find(name, "param"), name, "param");
  }
  if (opt) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& name = params.names()[i];
      detail::restore_tensor(opt->first_moments()[i], c.find(name, "adam_m"), name, "adam_m");
      detail::restore_tensor(opt->second_moments()[i], c.find(name, "adam_v"), name, "adam_v");
    }
    opt->set_steps(c.optimizer_steps);
  }
}

}  // namespace slamp
