#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "metafuse/error.hpp"
#include "metafuse/metadata_codec.hpp"
#include "oracles.hpp"

using namespace metafuse;

namespace {

MetadataTable ham_like() {
  MetadataTable t;
  t.field_names = {"age", "sex", "site"};
  t.records = {{"55", "male", "scalp"}, {"5", "female", std::nullopt}, {std::nullopt, "unknown", "back"}};
  return t;
}

}  // namespace

TEST(MetadataCodec, EncodesBytesAsAsciiCodes) {
  const auto enc = encode_table(ham_like());
  ASSERT_EQ(enc.spans.size(), 3u);
  EXPECT_EQ(enc.spans[0], (FieldSpan{"age", 0, 2}));
  EXPECT_EQ(enc.spans[1], (FieldSpan{"sex", 2, 7}));
  EXPECT_EQ(enc.spans[2], (FieldSpan{"site", 9, 5}));
  EXPECT_EQ(enc.width(), 14u);

  // "55" -> 53 53 ; "male" -> 109 97 108 101 then space padding
  const std::vector<std::uint8_t> row0 = {53, 53, 109, 97, 108, 101, 32, 32, 32, 115, 99, 97, 108, 112};
  EXPECT_TRUE(std::equal(row0.begin(), row0.end(), enc.values.row(0).begin()));
}

TEST(MetadataCodec, MissingValuesAreZeroRuns) {
  const auto enc = encode_table(ham_like());
  for (std::size_t k = 9; k < 14; ++k) EXPECT_EQ(enc.values(1, k), 0);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(enc.values(2, k), 0);
  // "5" in a width-2 field keeps its code and pads with a space.
  EXPECT_EQ(enc.values(1, 0), 53);
  EXPECT_EQ(enc.values(1, 1), 32);
}

TEST(MetadataCodec, EmptyStringIsMissing) {
  MetadataTable t;
  t.field_names = {"a"};
  t.records = {{""}, {"x"}};
  const auto enc = encode_table(t);
  EXPECT_EQ(enc.values(0, 0), 0);
  EXPECT_FALSE(decode_table(enc, t.field_names).records[0][0].has_value());
}

TEST(MetadataCodec, AllMissingFieldGetsWidthOne) {
  MetadataTable t;
  t.field_names = {"a", "b"};
  t.records = {{std::nullopt, "x"}, {std::nullopt, "yz"}};
  const auto enc = encode_table(t);
  EXPECT_EQ(enc.spans[0].width, 1u);
  EXPECT_EQ(enc.width(), 3u);
}

TEST(MetadataCodec, IsDeterministic) {
  const auto a = encode_table(ham_like());
  const auto b = encode_table(ham_like());
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.spans, b.spans);
}

TEST(MetadataCodec, RejectsNonAsciiAndNul) {
  MetadataTable t;
  t.field_names = {"site"};
  t.records = {{"ok"}, {std::string("caf\xC3\xA9")}};
  try {
    encode_table(t);
    FAIL() << "expected EncodingError";
  } catch (const EncodingError& e) {
    EXPECT_EQ(e.row, 1u);
    EXPECT_EQ(e.field, "site");
    EXPECT_EQ(e.byte, 0xC3);
  }
  t.records[1][0] = std::string("a\0b", 3);
  EXPECT_THROW(encode_table(t), EncodingError);
}

TEST(MetadataCodec, EmptyTableIsDomainError) {
  MetadataTable t;
  t.field_names = {"a"};
  EXPECT_THROW(encode_table(t), DomainError);
}

TEST(MetadataCodec, RaggedOrDuplicateFieldsRejected) {
  MetadataTable t;
  t.field_names = {"a", "a"};
  t.records = {{"x", "y"}};
  EXPECT_THROW(encode_table(t), ConfigError);
  t.field_names = {"a", "b"};
  t.records = {{"x"}};
  EXPECT_THROW(encode_table(t), ConfigError);
}

TEST(MetadataCodec, DecodeRejectsMisalignedSpans) {
  auto enc = encode_table(ham_like());
  enc.spans[1].offset += 1;
  EXPECT_THROW(decode_table(enc, {"age", "sex", "site"}), FormatError);
  EXPECT_THROW(decode_table(encode_table(ham_like()), {"age"}), FormatError);
}

TEST(MetadataCodec, RoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = oracle::random_table(rng);
    const auto enc = encode_table(t);
    for (auto v : enc.values.values()) ASSERT_LE(v, 127);
    const auto back = decode_table(enc, t.field_names);
    ASSERT_EQ(back, oracle::trimmed(t)) << "trial " << trial;
    ASSERT_EQ(right_trimmed(t), oracle::trimmed(t));
  }
}

TEST(MetadataCodec, LoadsCsvWithEmptyCellsAsMissing) {
  const auto dir = std::filesystem::temp_directory_path() / "metafuse_codec_csv";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "meta.csv");
    out << "image_id,age,sex,dx\nI1,55,male,nv\nI2,,female,mel\n";
  }
  const auto src = load_metadata_csv(dir / "meta.csv", "image_id", {"sex", "age"});
  EXPECT_EQ(src.sample_ids, (std::vector<std::string>{"I1", "I2"}));
  EXPECT_EQ(src.table.field_names, (std::vector<std::string>{"sex", "age"}));
  EXPECT_EQ(src.table.records[0][1], std::optional<std::string>("55"));
  EXPECT_FALSE(src.table.records[1][1].has_value());
  EXPECT_THROW(load_metadata_csv(dir / "meta.csv", "image_id", {"nope"}), ConfigError);
  std::filesystem::remove_all(dir);
}
