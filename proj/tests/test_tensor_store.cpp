#include <gtest/gtest.h>

#include <cstring>
#include <json.hpp>

#include "support.hpp"
#include "unicam/errors.hpp"
#include "unicam/manifest.hpp"
#include "unicam/npy.hpp"

using namespace unicam;
using testsupport::TempDir;

namespace {

// Hand-assembled NPY bytes, independent of encode_npy.
std::string npy_bytes(const std::string& dict, const std::string& payload) {
  std::string header = dict;
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::string out = "\x93NUMPY";
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(header.size() & 0xff);
  out += static_cast<char>(header.size() >> 8);
  return out + header + payload;
}

template <typename T>
std::string raw(std::initializer_list<T> values) {
  std::string s(values.size() * sizeof(T), '\0');
  std::memcpy(s.data(), std::data(values), s.size());
  return s;
}

void write_manifest_json(const std::filesystem::path& p, const nlohmann::json& doc) {
  testsupport::spit(p, doc.dump());
}

}  // namespace

TEST(Npy, LoadsHandWrittenF8) {
  TempDir dir("npy");
  testsupport::spit(dir / "a.npy", npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }",
                                             raw<double>({1, 2, 3, 4})));
  const auto t = load_tensor(dir / "a.npy");
  EXPECT_EQ(t.shape(), (Shape{2, 2}));
  EXPECT_EQ(std::vector<double>(t.data().begin(), t.data().end()), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Npy, WidensF4) {
  TempDir dir("npy");
  testsupport::spit(dir / "a.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (3,), }",
                                             raw<float>({0.5f, -1.25f, 3.0f})));
  const auto t = load_tensor(dir / "a.npy");
  EXPECT_EQ(t.shape(), (Shape{3}));
  EXPECT_EQ(t[0], 0.5);
  EXPECT_EQ(t[1], -1.25);
  EXPECT_EQ(t[2], 3.0);
}

TEST(Npy, RejectsFortranOrder) {
  TempDir dir("npy");
  testsupport::spit(dir / "f.npy", npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }",
                                             raw<double>({1, 2, 3, 4})));
  try {
    load_tensor(dir / "f.npy");
    FAIL() << "expected rejection";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported layout"), std::string::npos) << e.what();
  }
}

TEST(Npy, RejectsBadInputs) {
  TempDir dir("npy");
  const auto expect_reject = [&](const std::string& bytes, const char* needle) {
    testsupport::spit(dir / "x.npy", bytes);
    try {
      load_tensor(dir / "x.npy");
      ADD_FAILURE() << "accepted input expected to fail with " << needle;
    } catch (const ContractError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_reject("not numpy at all", "magic");
  expect_reject(npy_bytes("{'descr': '<i8', 'fortran_order': False, 'shape': (1,), }", raw<double>({1})),
                "dtype");
  expect_reject(npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (1,), }", raw<double>({1})),
                "dtype");
  expect_reject(npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2,), }",
                          raw<double>({1, std::numeric_limits<double>::quiet_NaN()})),
                "non-finite");
  expect_reject(npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }", raw<double>({1, 2})),
                "payload");
  expect_reject(npy_bytes("{'descr': '<f8', 'shape': (1,), }", raw<double>({1})), "malformed header");
}

TEST(Npy, MinimalTensorLayout) {
  TempDir dir("npy");
  write_tensor(Tensor({1}, {0.0}), dir / "one.npy");
  const auto bytes = testsupport::slurp(dir / "one.npy");
  ASSERT_EQ(bytes.size(), 128u + 8u);
  EXPECT_EQ(bytes.substr(0, 6), "\x93NUMPY");
  EXPECT_EQ(bytes[6], '\x01');
  EXPECT_EQ(bytes[7], '\x00');
  const unsigned header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
  EXPECT_EQ(10 + header_len, 128u);
  EXPECT_EQ(bytes[127], '\n');
  EXPECT_EQ(read_npy_header(dir / "one.npy").data_offset, 128u);
}

TEST(Npy, RoundTripIsBitwise) {
  TempDir dir("npy");
  SplitMix64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    Shape shape(1 + rng.next() % 4);
    for (auto& s : shape) s = 1 + rng.next() % 6;
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) {
      // Mix magnitudes, signed zeros and subnormals.
      switch (rng.next() % 5) {
        case 0: x = rng.uniform(-1, 1); break;
        case 1: x = rng.uniform(-1e300, 1e300); break;
        case 2: x = -0.0; break;
        case 3: x = rng.uniform(0, 1) * 4.9e-320; break;
        default: x = static_cast<double>(static_cast<std::int64_t>(rng.next())); break;
      }
    }
    const Tensor t(shape, v);
    const auto path = dir / "rt.npy";
    write_tensor(t, path);
    ASSERT_TRUE(bitwise_equal(load_tensor(path), t)) << "trial " << trial;
  }
}

TEST(Npy, RowMajorOffsets) {
  std::vector<double> v(60);
  for (std::size_t i = 0; i < 60; ++i) v[i] = static_cast<double>(i);
  TempDir dir("npy");
  write_tensor(Tensor({3, 4, 5}, v), dir / "t.npy");
  const auto t = load_tensor(dir / "t.npy");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(t[i * 20 + j * 5 + k], double(i * 20 + j * 5 + k));
}

TEST(TensorType, InvariantsEnforced) {
  EXPECT_THROW(Tensor({}, {}), ContractError);
  EXPECT_THROW(Tensor({2, 0}, {}), ContractError);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ContractError);
}

TEST(Flatten, ShapeArithmetic) {
  SplitMix64 rng(3);
  const auto t = testsupport::uniform_tensor(rng, {4, 2, 3, 3});
  const auto f = flatten_batch(t);
  EXPECT_EQ(f.shape(), (Shape{4, 18}));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t w = 0; w < 3; ++w)
          EXPECT_EQ(f[i * 18 + c * 9 + h * 3 + w], t[((i * 2 + c) * 3 + h) * 3 + w]);
  const auto two = testsupport::uniform_tensor(rng, {5, 7});
  EXPECT_TRUE(bitwise_equal(flatten_batch(two), two));
  EXPECT_THROW(flatten_batch(Tensor({3}, {1, 2, 3})), ContractError);
}

TEST(Flatten, CoordinateBookkeeping) {
  // Each element encodes its own coordinates; flattening must keep the row.
  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Shape shape{1 + rng.next() % 5, 1 + rng.next() % 4, 1 + rng.next() % 4};
    const std::size_t per = shape[1] * shape[2];
    std::vector<double> v(shape_size(shape));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const auto f = flatten_batch(Tensor(shape, v));
    ASSERT_EQ(f.shape(), (Shape{shape[0], per}));
    for (std::size_t r = 0; r < shape[0]; ++r)
      for (std::size_t c = 0; c < per; ++c)
        ASSERT_EQ(static_cast<std::size_t>(f[r * per + c]) / per, r);
  }
}

class ManifestTest : public ::testing::Test {
 protected:
  TempDir dir{"manifest"};
  void tensor(const std::string& name, Shape shape, double fill = 1.0) {
    write_tensor(Tensor::filled(std::move(shape), fill), dir / name);
  }
};

TEST_F(ManifestTest, ActsOnlyEntry) {
  tensor("a.npy", {4, 2, 3, 3});
  write_manifest_json(dir / "m.json", {{"layer", "L4"}, {"entries", {{{"acts", "a.npy"}}}}});
  const auto m = load_manifest(dir / "m.json");
  EXPECT_EQ(m.layer, "L4");
  ASSERT_EQ(m.entries.size(), 1u);
  EXPECT_FALSE(m.entries[0].grads);
  EXPECT_FALSE(m.entries[0].labels);
  EXPECT_EQ(m.sample_shape, (Shape{2, 3, 3}));
  EXPECT_TRUE(m.warnings.empty());
}

TEST_F(ManifestTest, NullOptionalsAccepted) {
  tensor("a.npy", {4, 3});
  write_manifest_json(dir / "m.json",
                      {{"layer", "x"}, {"entries", {{{"acts", "a.npy"}, {"grads", nullptr}, {"labels", nullptr}}}}});
  const auto m = load_manifest(dir / "m.json");
  EXPECT_FALSE(m.entries[0].grads);
}

TEST_F(ManifestTest, FileOrderPreserved) {
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 4; i >= 0; --i) {
    const auto name = "b" + std::to_string(i) + ".npy";
    tensor(name, {static_cast<std::size_t>(4 + i), 3}, i);
    entries.push_back({{"acts", name}});
  }
  write_manifest_json(dir / "m.json", {{"layer", "x"}, {"entries", entries}});
  const auto m = load_manifest(dir / "m.json");
  ASSERT_EQ(m.entries.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(m.entries[j].acts.filename(), "b" + std::to_string(4 - j) + ".npy");
    EXPECT_EQ(m.batch_sizes[j], 8 - j);
  }
}

TEST_F(ManifestTest, WriteThenLoadKeepsOrder) {
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < 3; ++i) {
    const auto name = "c" + std::to_string(i) + ".npy";
    tensor(name, {5, 2});
    entries.push_back({name, std::nullopt, std::nullopt});
  }
  write_manifest("feat", entries, dir / "w.json");
  const auto m = load_manifest(dir / "w.json");
  ASSERT_EQ(m.entries.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(m.entries[i].acts, dir / ("c" + std::to_string(i) + ".npy"));
}

TEST_F(ManifestTest, RejectsInconsistentShapes) {
  tensor("a.npy", {4, 2, 3});
  tensor("b.npy", {4, 3, 2});
  write_manifest_json(dir / "m.json", {{"layer", "x"}, {"entries", {{{"acts", "a.npy"}}, {{"acts", "b.npy"}}}}});
  EXPECT_THROW(load_manifest(dir / "m.json"), ContractError);
}

TEST_F(ManifestTest, RejectsSchemaViolations) {
  tensor("a.npy", {4, 2});
  tensor("g.npy", {4, 3});
  tensor("l.npy", {5});
  const auto rejects = [&](const nlohmann::json& doc) {
    write_manifest_json(dir / "m.json", doc);
    EXPECT_THROW(load_manifest(dir / "m.json"), ContractError) << doc.dump();
  };
  rejects({{"entries", {{{"acts", "a.npy"}}}}});
  rejects({{"layer", "x"}, {"entries", nlohmann::json::array()}});
  rejects({{"layer", "x"}, {"entries", {{{"acts", 3}}}}});
  rejects({{"layer", "x"}, {"entries", {{{"acts", "missing.npy"}}}}});
  rejects({{"layer", "x"}, {"entries", {{{"acts", "a.npy"}, {"grads", "g.npy"}}}}});
  rejects({{"layer", "x"}, {"entries", {{{"acts", "a.npy"}, {"labels", "l.npy"}}}}});
  testsupport::spit(dir / "m.json", "{not json");
  EXPECT_THROW(load_manifest(dir / "m.json"), ContractError);
}

TEST_F(ManifestTest, SmallBatchWarns) {
  tensor("a.npy", {3, 2});
  write_manifest_json(dir / "m.json", {{"layer", "x"}, {"entries", {{{"acts", "a.npy"}}}}});
  const auto m = load_manifest(dir / "m.json");
  ASSERT_EQ(m.warnings.size(), 1u);
}

TEST_F(ManifestTest, PathsRelativeToManifest) {
  std::filesystem::create_directories(dir / "sub");
  tensor("sub/a.npy", {4, 2});
  write_manifest_json(dir / "sub" / "m.json", {{"layer", "x"}, {"entries", {{{"acts", "a.npy"}}}}});
  EXPECT_NO_THROW(load_manifest(dir / "sub" / "m.json"));
}
