#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "smoothrob/error.hpp"

namespace smoothrob::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = ::crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

/// Appends little-endian scalars to a byte buffer.
class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }

  /// Appends the CRC-32 of everything written so far.
  void seal() { u32(crc32(buf_.data(), buf_.size())); }

  const std::vector<std::uint8_t>& buffer() const { return buf_; }

  /// Writes to `path` through a temporary file so readers never see a partial file.
  void save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot open " + tmp.string() + " for writing");
      out.write(reinterpret_cast<const char*>(buf_.data()), std::streamsize(buf_.size()));
      if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader over an in-memory buffer.
class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> buf, std::string what)
      : buf_(std::move(buf)), what_(std::move(what)) {}

  static Reader open(const std::filesystem::path& path, std::string what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(buf), std::move(what));
  }

  /// Verifies and strips the trailing CRC-32.
  void check_seal() {
    if (buf_.size() < 4) throw FormatError(what_ + ": truncated (no checksum)");
    std::uint32_t stored;
    std::memcpy(&stored, buf_.data() + buf_.size() - 4, 4);
    buf_.resize(buf_.size() - 4);
    if (crc32(buf_.data(), buf_.size()) != stored) throw FormatError(what_ + ": checksum mismatch");
  }

  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError(what_ + ": truncated payload");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    const auto n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<double> f64s(std::size_t n) {
    if (n > remaining() / sizeof(double)) throw FormatError(what_ + ": truncated payload");
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  void expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    bytes(got.data(), got.size());
    if (got != magic) throw FormatError(what_ + ": bad magic");
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string what_;
};

/// Whole-file read that transparently inflates gzip input.
inline std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int n;
  while ((n = gzread(f, chunk, sizeof chunk)) > 0) out.insert(out.end(), chunk, chunk + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw FormatError(path.string() + ": corrupt gzip stream");
  return out;
}

}  // namespace smoothrob::io
