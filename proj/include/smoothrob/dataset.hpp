#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smoothrob/binary_io.hpp"
#include "smoothrob/error.hpp"
#include "smoothrob/rng.hpp"
#include "smoothrob/tensor.hpp"

namespace smoothrob {

/// Labeled inputs in [0,1]^dim, stored as one row-major (size x dim) block.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t dim, std::size_t num_classes, std::vector<double> inputs,
          std::vector<std::size_t> labels, std::string name = {}, std::string split = {})
      : dim_(dim),
        num_classes_(num_classes),
        inputs_(std::move(inputs)),
        labels_(std::move(labels)),
        name_(std::move(name)),
        split_(std::move(split)) {
    validate();
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::string& name() const noexcept { return name_; }
  const std::string& split() const noexcept { return split_; }

  std::span<const double> row(std::size_t i) const { return {inputs_.data() + i * dim_, dim_}; }
  std::size_t label(std::size_t i) const { return labels_[i]; }
  Tensor input(std::size_t i) const {
    auto r = row(i);
    return Tensor({dim_}, std::vector<double>(r.begin(), r.end()));
  }

  const std::vector<double>& inputs() const noexcept { return inputs_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  /// Examples [first, first + count), clamped to the dataset size.
  Dataset slice(std::size_t first, std::size_t count) const {
    first = std::min(first, size());
    count = std::min(count, size() - first);
    std::vector<double> in(inputs_.begin() + std::ptrdiff_t(first * dim_),
                           inputs_.begin() + std::ptrdiff_t((first + count) * dim_));
    std::vector<std::size_t> lb(labels_.begin() + std::ptrdiff_t(first),
                                labels_.begin() + std::ptrdiff_t(first + count));
    return Dataset(dim_, num_classes_, std::move(in), std::move(lb), name_, split_);
  }

  /// Examples picked by index, in the given order.
  Dataset select(const std::vector<std::size_t>& idx) const {
    std::vector<double> in;
    std::vector<std::size_t> lb;
    in.reserve(idx.size() * dim_);
    for (auto i : idx) {
      auto r = row(i);
      in.insert(in.end(), r.begin(), r.end());
      lb.push_back(labels_[i]);
    }
    return Dataset(dim_, num_classes_, std::move(in), std::move(lb), name_, split_);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void validate() const {
    if (dim_ == 0) throw ShapeError("dataset: zero input dimension");
    if (inputs_.size() != labels_.size() * dim_) throw ShapeError("dataset: input block size mismatch");
    for (double v : inputs_) {
      if (!(v >= 0.0 && v <= 1.0)) throw FormatError("dataset: input outside [0,1]");
    }
    for (auto l : labels_) {
      if (l >= num_classes_) throw FormatError("dataset: label " + std::to_string(l) + " out of range");
    }
  }

  std::size_t dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> inputs_;
  std::vector<std::size_t> labels_;
  std::string name_;
  std::string split_;
};

namespace detail {

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace detail

/// Reads an MNIST-style IDX image/label pair (optionally gzip-compressed).
/// Pixels are scaled by 1/255; labels must be < 10.
inline Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        std::string name = "mnist", std::string split = {}) {
  const auto img = io::read_maybe_gzip(images);
  const auto lab = io::read_maybe_gzip(labels);
  if (img.size() < 16 || detail::be32(img, 0) != 0x00000803u) {
    throw FormatError(images.string() + ": not an IDX image file (bad magic)");
  }
  if (lab.size() < 8 || detail::be32(lab, 0) != 0x00000801u) {
    throw FormatError(labels.string() + ": not an IDX label file (bad magic)");
  }
  const std::size_t n = detail::be32(img, 4);
  const std::size_t rows = detail::be32(img, 8);
  const std::size_t cols = detail::be32(img, 12);
  const std::size_t nl = detail::be32(lab, 4);
  if (n != nl) {
    throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(nl) +
                      " labels");
  }
  const std::size_t dim = rows * cols;
  if (img.size() - 16 < n * dim) throw FormatError(images.string() + ": truncated payload");
  if (lab.size() - 8 < n) throw FormatError(labels.string() + ": truncated payload");

  std::vector<double> inputs(n * dim);
  for (std::size_t i = 0; i < n * dim; ++i) inputs[i] = double(img[16 + i]) / 255.0;
  std::vector<std::size_t> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = lab[8 + i];
  return Dataset(dim, 10, std::move(inputs), std::move(ys), std::move(name), std::move(split));
}

/// K Gaussian clusters (unit variance in a latent space) whose means sit on a
/// regular simplex with edge length `separation`, mapped affinely into the unit
/// box and clipped. Examples are interleaved by class. Deterministic per seed.
///
/// When dim >= K the simplex vertices are the first K scaled basis vectors;
/// otherwise they are seeded random directions (no longer a regular simplex).
inline Dataset synth_blobs(std::size_t k, std::size_t n_per_class, std::size_t dim, double separation,
                           std::uint64_t seed, std::string split = "train") {
  if (k < 2) throw ParameterError("synth_blobs: need K >= 2");
  if (dim < 1) throw ParameterError("synth_blobs: need dim >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> means(k, std::vector<double>(dim, 0.0));
  if (dim >= k) {
    for (std::size_t c = 0; c < k; ++c) means[c][c] = separation / std::sqrt(2.0);
  } else {
    Rng dir_rng(derive_seed(seed, 0xD1));
    for (auto& m : means) {
      double norm = 0.0;
      for (auto& v : m) {
        v = dir_rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : m) v = v / norm * separation / 2.0;
    }
  }
  // Latent coordinates live roughly in [-4, separation + 4]; squeeze that into [0, 1].
  const double scale = 1.0 / (separation + 8.0);
  std::vector<double> inputs;
  std::vector<std::size_t> labels;
  inputs.reserve(k * n_per_class * dim);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double latent = means[c][d] + rng.normal();
        inputs.push_back(std::clamp(0.5 + (latent - separation / (2.0 * std::sqrt(2.0))) * scale, 0.0, 1.0));
      }
      labels.push_back(c);
    }
  }
  return Dataset(dim, k, std::move(inputs), std::move(labels), "blobs", std::move(split));
}

inline constexpr char kDatasetMagic[] = "SRDSET01";
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Internal cache format: magic, version, header, float64 inputs, u32 labels, CRC-32.
inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  io::Writer w;
  w.bytes(kDatasetMagic, 8);
  w.u32(kDatasetFormatVersion);
  w.str(d.name());
  w.str(d.split());
  w.u64(d.size());
  w.u64(d.dim());
  w.u64(d.num_classes());
  w.f64s(d.inputs());
  for (auto l : d.labels()) w.u32(static_cast<std::uint32_t>(l));
  w.seal();
  w.save(path);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  auto r = io::Reader::open(path, path.string());
  r.expect_magic(std::string_view(kDatasetMagic, 8));
  const auto version = r.u32();
  if (version != kDatasetFormatVersion) {
    throw VersionError(path.string() + ": unsupported dataset format version " + std::to_string(version));
  }
  r.check_seal();
  auto name = r.str();
  auto split = r.str();
  const auto n = r.u64();
  const auto dim = r.u64();
  const auto k = r.u64();
  if (dim != 0 && n > r.remaining() / dim) throw FormatError(path.string() + ": truncated payload");
  auto inputs = r.f64s(n * dim);
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = r.u32();
  return Dataset(dim, k, std::move(inputs), std::move(labels), std::move(name), std::move(split));
}

}  // namespace smoothrob
