#include <gtest/gtest.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace smoothrob;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "smoothrob_test_data_io";
  fs::create_directories(dir);
  return dir / name;
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(std::uint8_t(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols, std::uint8_t fill) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x803);
  put_be32(b, n);
  put_be32(b, rows);
  put_be32(b, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) b.push_back(std::uint8_t(fill + i % 7));
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& ys) {
  std::vector<std::uint8_t> b;
  put_be32(b, 0x801);
  put_be32(b, std::uint32_t(ys.size()));
  b.insert(b.end(), ys.begin(), ys.end());
  return b;
}

void write_raw(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
}

void write_gz(const fs::path& p, const std::vector<std::uint8_t>& b) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  gzwrite(f, b.data(), unsigned(b.size()));
  gzclose(f);
}

}  // namespace

TEST(Idx, TwoImageFixture) {
  auto img = idx_images(2, 28, 28, 0);
  img[16] = 255;
  write_raw(scratch("img.idx"), img);
  write_raw(scratch("lab.idx"), idx_labels({7, 2}));
  const auto d = load_idx(scratch("img.idx"), scratch("lab.idx"));
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 784u);
  EXPECT_EQ(d.label(0), 7u);
  EXPECT_EQ(d.label(1), 2u);
  EXPECT_EQ(d.row(0)[0], 1.0);
  EXPECT_EQ(d.row(0)[1], 1.0 / 255.0);
}

TEST(Idx, GzipMatchesRaw) {
  const auto img = idx_images(3, 4, 5, 10);
  const auto lab = idx_labels({0, 1, 9});
  write_raw(scratch("a.idx"), img);
  write_raw(scratch("b.idx"), lab);
  write_gz(scratch("a.idx.gz"), img);
  write_gz(scratch("b.idx.gz"), lab);
  EXPECT_EQ(load_idx(scratch("a.idx"), scratch("b.idx")).inputs(),
            load_idx(scratch("a.idx.gz"), scratch("b.idx.gz")).inputs());
}

TEST(Idx, ErrorPaths) {
  auto img = idx_images(2, 2, 2, 0);
  write_raw(scratch("ok_img"), img);
  write_raw(scratch("ok_lab"), idx_labels({1, 2}));
  auto bad = img;
  bad[3] = 0x04;
  write_raw(scratch("bad_magic"), bad);
  EXPECT_THROW(load_idx(scratch("bad_magic"), scratch("ok_lab")), FormatError);
  EXPECT_THROW(load_idx(scratch("ok_img"), scratch("ok_img")), FormatError);
  write_raw(scratch("three_lab"), idx_labels({1, 2, 3}));
  EXPECT_THROW(load_idx(scratch("ok_img"), scratch("three_lab")), FormatError);
  img.resize(img.size() - 1);
  write_raw(scratch("short_img"), img);
  EXPECT_THROW(load_idx(scratch("short_img"), scratch("ok_lab")), FormatError);
  write_raw(scratch("big_label"), idx_labels({1, 10}));
  EXPECT_THROW(load_idx(scratch("ok_img"), scratch("big_label")), FormatError);
  EXPECT_THROW(load_idx(scratch("missing"), scratch("ok_lab")), Error);
}

TEST(Idx, BundledMnistSubset) {
  const fs::path dir = fs::path(SMOOTHROB_SOURCE_DIR) / "data" / "mnist";
  const auto test = load_idx(dir / "t10k-images-idx3-ubyte.gz", dir / "t10k-labels-idx1-ubyte.gz");
  EXPECT_EQ(test.dim(), 784u);
  EXPECT_GE(test.size(), 1000u);
  std::vector<int> counts(10, 0);
  for (auto y : test.labels()) ++counts[y];
  for (int c : counts) EXPECT_GT(c, 0);
}

TEST(Blobs, DeterministicAndInBox) {
  const auto a = synth_blobs(4, 50, 6, 8.0, 3);
  const auto b = synth_blobs(4, 50, 6, 8.0, 3);
  const auto c = synth_blobs(4, 50, 6, 8.0, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.inputs(), c.inputs());
  EXPECT_EQ(a.size(), 200u);
  for (double v : a.inputs()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(a.label(0), 0u);
  EXPECT_EQ(a.label(5), 1u);
  EXPECT_THROW(synth_blobs(1, 10, 3, 8.0, 1), ParameterError);
}

TEST(Blobs, NearestMeanIsNearlyPerfectAtLargeSeparation) {
  const auto d = synth_blobs(5, 200, 8, 30.0, 9);
  std::vector<std::vector<double>> mean(5, std::vector<double>(8, 0.0));
  std::vector<int> n(5, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    ++n[d.label(i)];
    for (int j = 0; j < 8; ++j) mean[d.label(i)][j] += d.row(i)[j];
  }
  for (int c = 0; c < 5; ++c) {
    for (auto& v : mean[c]) v /= n[c];
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    double bd = 1e9;
    for (std::size_t c = 0; c < 5; ++c) {
      const double dist = l2_distance(d.row(i), mean[c]);
      if (dist < bd) {
        bd = dist;
        best = c;
      }
    }
    ok += best == d.label(i);
  }
  EXPECT_EQ(ok, d.size());
}

TEST(DatasetCache, RoundTripAndErrors) {
  const auto d = synth_blobs(3, 20, 4, 8.0, 5, "test");
  save_dataset(d, scratch("cache.bin"));
  EXPECT_EQ(load_dataset(scratch("cache.bin")), d);

  std::ifstream in(scratch("cache.bin"), std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto flipped = bytes;
  flipped[60] ^= 0x10;
  write_raw(scratch("cache_bad.bin"), std::vector<std::uint8_t>(flipped.begin(), flipped.end()));
  EXPECT_THROW(load_dataset(scratch("cache_bad.bin")), FormatError);
  auto future = bytes;
  future[8] = 9;
  write_raw(scratch("cache_future.bin"), std::vector<std::uint8_t>(future.begin(), future.end()));
  EXPECT_THROW(load_dataset(scratch("cache_future.bin")), VersionError);
}

TEST(Dataset, Validation) {
  EXPECT_THROW(Dataset(2, 2, {0.1, 1.5}, {0}), FormatError);
  EXPECT_THROW(Dataset(2, 2, {0.1, 0.5}, {2}), FormatError);
  EXPECT_THROW(Dataset(2, 2, {0.1}, {0}), ShapeError);
  const Dataset d(1, 3, {0.1, 0.2, 0.3}, {0, 1, 2});
  EXPECT_EQ(d.slice(1, 5).size(), 2u);
  EXPECT_EQ(d.select({2, 0}).label(0), 2u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto m = testutil::random_model({7, 5, 3}, 8);
  const CheckpointMeta meta{{"alpha", "0.9"}, {"label_mode", "smoothed"}};
  save_checkpoint(m, meta, scratch("m.ckpt"));
  const auto ck = load_checkpoint(scratch("m.ckpt"));
  EXPECT_EQ(ck.model, m);
  EXPECT_EQ(ck.meta, meta);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto x = testutil::random_input(7, rng);
    EXPECT_EQ(forward(ck.model, x), forward(m, x));
  }
}

TEST(Checkpoint, CorruptionAndVersionErrors) {
  const auto m = testutil::random_model({4, 3}, 9);
  auto bytes = encode_checkpoint(m, {{"k", "v"}});
  for (std::size_t pos : {std::size_t(20), bytes.size() / 2, bytes.size() - 6}) {
    auto bad = bytes;
    bad[pos] ^= 0x01;
    EXPECT_THROW(decode_checkpoint(bad), FormatError) << pos;
  }
  auto truncated = bytes;
  truncated.resize(truncated.size() - 9);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  EXPECT_THROW(decode_checkpoint(encode_checkpoint(m, {}, 2)), VersionError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), FormatError);
  EXPECT_THROW(load_checkpoint(scratch("does_not_exist.ckpt")), Error);
}
