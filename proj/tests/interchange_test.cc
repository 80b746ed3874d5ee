// Copyright 2026 The protoeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "fixtures.h"
#include "json.hpp"
#include "protoeval/errors.h"
#include "protoeval/interchange.h"
#include "protoeval/proto_kernel.h"

namespace fs = std::filesystem;
using namespace protoeval;

namespace {

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path golden(const char* name) { return fs::path(PROTOEVAL_GOLDEN_DIR) / name; }

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& b, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(b, bits);
}

}  // namespace

TEST(TensorFile, DecodesRankOneVector) {
  std::vector<std::uint8_t> b = {'Q', 'P', 'T', '1'};
  put_u32(b, 1);
  put_u32(b, 3);
  for (float f : {1.0f, 2.0f, 3.0f}) put_f32(b, f);
  const Tensor t = decode_tensor(b);
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{3}));
  EXPECT_EQ(t.data, (std::vector<float>{1, 2, 3}));
}

TEST(TensorFile, ScalarZeroMatchesGoldenBytes) {
  const auto dir = fixture::temp_dir("scalar");
  write_tensor(make_tensor({1}, {0.0f}), dir / "z.qpt");
  const auto bytes = file_bytes(dir / "z.qpt");
  ASSERT_EQ(bytes.size(), 16u);
  EXPECT_EQ(bytes, file_bytes(golden("scalar_zero.qpt")));
  const std::vector<std::uint8_t> expected = {'Q', 'P', 'T', '1', 1, 0, 0, 0,
                                              1,   0,   0,   0,   0, 0, 0, 0};
  EXPECT_EQ(bytes, expected);
}

TEST(TensorFile, IdentityTwoByTwoIs32Bytes) {
  const auto dir = fixture::temp_dir("ident");
  write_tensor(make_tensor({2, 2}, {1, 0, 0, 1}), dir / "i.qpt");
  const auto bytes = file_bytes(dir / "i.qpt");
  EXPECT_EQ(bytes.size(), 4u + 4u + 8u + 16u);
  EXPECT_EQ(bytes, file_bytes(golden("identity_2x2.qpt")));
  const Tensor t = read_tensor(golden("identity_2x2.qpt"));
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 2}));
  EXPECT_EQ(t.data, (std::vector<float>{1, 0, 0, 1}));
}

TEST(TensorFile, RankThreeGoldenRoundTrips) {
  const Tensor t = read_tensor(golden("ramp_2x1x3.qpt"));
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 1, 3}));
  EXPECT_EQ(t.data[1], -1.25f);
  EXPECT_TRUE(std::signbit(t.data[5]));
  EXPECT_EQ(encode_tensor(t), file_bytes(golden("ramp_2x1x3.qpt")));
}

TEST(TensorFile, RoundTripIsBitIdenticalOnRandomArrays) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::uint32_t> dim(1, 5), rank(1, 4);
  std::uniform_int_distribution<std::uint32_t> bits;
  const auto dir = fixture::temp_dir("roundtrip");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> dims(rank(gen));
    std::size_t n = 1;
    for (auto& d : dims) n *= (d = dim(gen));
    std::vector<float> data(n);
    for (auto& f : data) {
      std::uint32_t b;
      do {
        b = bits(gen);
        std::memcpy(&f, &b, 4);
      } while (!std::isfinite(f));
    }
    const Tensor t = make_tensor(dims, data);
    write_tensor(t, dir / "t.qpt");
    const Tensor back = read_tensor(dir / "t.qpt");
    ASSERT_EQ(back.dims, t.dims);
    ASSERT_EQ(0, std::memcmp(back.data.data(), t.data.data(), n * 4));
  }
}

TEST(TensorFile, RejectsBadMagic) {
  auto b = encode_tensor(make_tensor({1}, {1.0f}));
  b[2] = 'X';
  EXPECT_THROW(decode_tensor(b), FormatError);
}

TEST(TensorFile, RejectsTruncation) {
  const auto b = encode_tensor(make_tensor({2, 2}, {1, 2, 3, 4}));
  for (std::size_t cut : {3u, 7u, 11u, 31u}) {
    std::vector<std::uint8_t> part(b.begin(), b.begin() + cut);
    EXPECT_THROW(decode_tensor(part), FormatError) << cut;
  }
}

TEST(TensorFile, RejectsRankOutOfRange) {
  std::vector<std::uint8_t> b = {'Q', 'P', 'T', '1'};
  put_u32(b, 5);
  for (int i = 0; i < 5; ++i) put_u32(b, 1);
  for (int i = 0; i < 1; ++i) put_f32(b, 0.0f);
  EXPECT_THROW(decode_tensor(b), FormatError);
  std::vector<std::uint8_t> z = {'Q', 'P', 'T', '1'};
  put_u32(z, 0);
  EXPECT_THROW(decode_tensor(z), FormatError);
}

TEST(TensorFile, RejectsTrailingBytes) {
  auto b = encode_tensor(make_tensor({1}, {1.0f}));
  b.push_back(0);
  EXPECT_THROW(decode_tensor(b), FormatError);
}

TEST(TensorFile, WriteRejectsEmptyArray) {
  Tensor t;
  const auto dir = fixture::temp_dir("empty");
  EXPECT_THROW(write_tensor(t, dir / "e.qpt"), ValidationError);
}

TEST(TensorFile, WriteToUnwritablePathIsIoError) {
  EXPECT_THROW(write_tensor(make_tensor({1}, {1.0f}), "/proc/protoeval/nope.qpt"), IoError);
}

TEST(TensorFile, ReadMissingFileIsIoError) {
  EXPECT_THROW(read_tensor("/nonexistent/protoeval.qpt"), IoError);
}

TEST(TensorFile, ConvertersCheckRank) {
  const Tensor t = make_tensor({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(to_map(t).at(1, 0), 3.0);
  EXPECT_THROW(to_image(t), ShapeError);
  EXPECT_THROW(to_feature_map(make_tensor({4}, {1, 2, 3, 4})), ShapeError);
}

// --- Bundles -------------------------------------------------------------------

class BundleTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = fixture::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }

  fs::path save(const Dataset& d) { return save_bundle(d, dir_); }

  nlohmann::json read_manifest(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
  }
  void write_manifest(const fs::path& p, const nlohmann::json& j) {
    std::ofstream(p) << j.dump(2);
  }

  fs::path dir_;
};

TEST_F(BundleTest, SingleSampleRoundTrip) {
  fixture::Options o;
  o.samples = 1;
  const Dataset d = fixture::make_dataset(o);
  const Dataset back = load_bundle(save(d));
  ASSERT_EQ(back.samples.size(), 1u);
  EXPECT_EQ(back.samples[0].sample_id, "s0");
  EXPECT_EQ(back.model.prototype_count(), fixture::kPrototypes);
  EXPECT_EQ(back.samples[0].labels, d.samples[0].labels);
  EXPECT_EQ(back.samples[0].parts.size(), 2u);
  EXPECT_TRUE(back.samples[0].object_mask.has_value());
  EXPECT_EQ(back.samples[0].forward.saliency_maps.size(), fixture::kPrototypes);
  EXPECT_EQ(back.manifest.part_vocabulary, d.manifest.part_vocabulary);
}

TEST_F(BundleTest, ResaveProducesIdenticalTensors) {
  const Dataset d = fixture::make_dataset({});
  const fs::path first = save(d);
  const Dataset back = load_bundle(first);
  const fs::path second_dir = dir_ / "again";
  save_bundle(back, second_dir);
  for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
    if (entry.path().extension() != ".qpt") continue;
    const auto rel = fs::relative(entry.path(), dir_);
    if (*rel.begin() == "again") continue;
    EXPECT_EQ(file_bytes(entry.path()), file_bytes(second_dir / rel)) << rel;
  }
}

TEST_F(BundleTest, AllModelKindsRoundTrip) {
  for (ModelKind kind :
       {ModelKind::kExplicitClassSpecific, ModelKind::kExplicitShared, ModelKind::kIndirect}) {
    fixture::Options o;
    o.kind = kind;
    const Dataset d = fixture::make_dataset(o);
    const auto dir = dir_ / to_string(kind);
    const Dataset back = load_bundle(save_bundle(d, dir));
    EXPECT_EQ(back.model.kind, kind);
    EXPECT_EQ(back.model.slot_assignment.size(), d.model.slot_assignment.size());
    for (const auto& s : back.samples) {
      EXPECT_LE(regeneration_error(back.model, s), 1e-4) << to_string(kind);
    }
  }
}

TEST_F(BundleTest, PerturbedEntriesRoundTrip) {
  Dataset d = fixture::make_dataset({});
  SuiteConfig cfg;
  cfg.suites = {Suite::kCompleteness, Suite::kContinuity};
  fixture::attach_perturbed(d, cfg);
  const Dataset back = load_bundle(save(d));
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].perturbed.size(), d.samples[i].perturbed.size());
  }
  const auto* e = back.samples[0].find_perturbed(PerturbationKind::kCompleteness,
                                                 d.samples[0].perturbed[0].prototype);
  ASSERT_NE(e, nullptr);
  EXPECT_TRUE(e->artifacts.feature_map.has_value());
}

TEST_F(BundleTest, MissingManifestIsManifestError) {
  EXPECT_THROW(load_bundle(dir_ / "absent.json"), ManifestError);
}

TEST_F(BundleTest, MissingReferencedFileIsManifestError) {
  const fs::path m = save(fixture::make_dataset({}));
  fs::remove(dir_ / fs::path(read_manifest(m)["samples"][0]["image"].get<std::string>()));
  EXPECT_THROW(load_bundle(m), ManifestError);
}

TEST_F(BundleTest, ClassCountBelowTwoIsRejected) {
  const fs::path m = save(fixture::make_dataset({}));
  auto j = read_manifest(m);
  j["class_count"] = 1;
  write_manifest(m, j);
  EXPECT_THROW(load_bundle(m), ManifestError);
}

TEST_F(BundleTest, ScoreOffByPointOneIsViolation) {
  Dataset d = fixture::make_dataset({});
  d.samples[2].forward.similarity_scores[1] += 0.1;
  const fs::path m = save(d);
  try {
    load_bundle(m);
    FAIL() << "expected a validation error";
  } catch (const BundleValidationError& e) {
    ASSERT_FALSE(e.violations().empty());
    EXPECT_NE(e.violations()[0].find("s2"), std::string::npos);
  }
}

TEST_F(BundleTest, SlotDistributionSummingToPointEightIsViolation) {
  fixture::Options o;
  o.kind = ModelKind::kExplicitShared;
  Dataset d = fixture::make_dataset(o);
  d.model.slot_assignment[0][0][0] = 0.8;
  EXPECT_THROW(load_bundle(save(d)), ValidationError);
}

TEST_F(BundleTest, ClassOfPrototypeRequiredExactlyForClassSpecific) {
  Dataset d = fixture::make_dataset({});
  d.model.class_of_prototype.clear();
  EXPECT_FALSE(validate_model(d.model).empty());
  fixture::Options o;
  o.kind = ModelKind::kIndirect;
  Dataset pip = fixture::make_dataset(o);
  pip.model.class_of_prototype.assign(fixture::kPrototypes, 0);
  EXPECT_FALSE(validate_model(pip.model).empty());
}

TEST_F(BundleTest, InvalidMaskDuplicatePartAndLabelsAreAllReported) {
  Dataset d = fixture::make_dataset({});
  d.samples[0].object_mask->values[0] = 2;
  d.samples[1].parts.push_back(d.samples[1].parts[0]);
  d.samples[2].labels = {0, 1};
  try {
    load_bundle(save(d));
    FAIL() << "expected a validation error";
  } catch (const BundleValidationError& e) {
    EXPECT_GE(e.violations().size(), 3u);
  }
}

TEST_F(BundleTest, ValidationIsTotalNoPartialResult) {
  Dataset d = fixture::make_dataset({});
  d.samples.back().forward.output.pop_back();
  EXPECT_THROW(load_bundle(save(d)), ValidationError);
}
