#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "smoothrob/binary_io.hpp"
#include "smoothrob/model.hpp"

namespace smoothrob {

inline constexpr char kCheckpointMagic[] = "SRCKPT01";
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Free-form training metadata stored next to the weights
/// (label_mode, alpha, seed, accuracies, init scheme, inner-attack settings).
using CheckpointMeta = std::map<std::string, std::string>;

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

/// Layout (all integers little-endian):
///   magic[8] "SRCKPT01" | u32 version | u32 n_layers
///   per layer: u64 in_dim | u64 out_dim | u8 activation
///   u32 n_meta | n_meta x (str key, str value)     str = u32 length + bytes
///   per layer: f64 weight[out*in] (row-major) | f64 bias[out]
///   u32 CRC-32 of everything before it
inline std::vector<std::uint8_t> encode_checkpoint(const Model& model, const CheckpointMeta& meta,
                                                   std::uint32_t version = kCheckpointFormatVersion) {
  io::Writer w;
  w.bytes(kCheckpointMagic, 8);
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u64(l.in_dim);
    w.u64(l.out_dim);
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  for (const auto& l : model.layers()) {
    w.f64s(l.weight);
    w.f64s(l.bias);
  }
  w.seal();
  return w.buffer();
}

inline Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& what = "checkpoint") {
  io::Reader r(std::move(bytes), what);
  r.expect_magic(std::string_view(kCheckpointMagic, 8));
  const auto version = r.u32();
  if (version != kCheckpointFormatVersion) {
    throw VersionError(what + ": unsupported checkpoint format version " + std::to_string(version) +
                       " (this build reads version " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  r.check_seal();
  const auto n_layers = r.u32();
  std::vector<DenseLayer> layers(n_layers);
  for (auto& l : layers) {
    l.in_dim = r.u64();
    l.out_dim = r.u64();
    const auto act = r.u8();
    if (act > 1) throw FormatError(what + ": unknown activation tag");
    l.activation = static_cast<Activation>(act);
  }
  Checkpoint ck;
  const auto n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.str();
    ck.meta[k] = r.str();
  }
  for (auto& l : layers) {
    if (l.out_dim != 0 && l.in_dim > r.remaining() / 8 / l.out_dim) throw FormatError(what + ": truncated payload");
    l.weight = r.f64s(l.in_dim * l.out_dim);
    l.bias = r.f64s(l.out_dim);
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after payload");
  ck.model = Model(std::move(layers));
  return ck;
}

inline void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  io::Writer w;
  const auto bytes = encode_checkpoint(model, meta);
  w.bytes(bytes.data(), bytes.size());
  w.save(path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = io::Reader::open(path, path.string());
  std::vector<std::uint8_t> bytes(r.remaining());
  r.bytes(bytes.data(), bytes.size());
  return decode_checkpoint(std::move(bytes), path.string());
}

}  // namespace smoothrob
