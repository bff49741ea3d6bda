#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "hats/event_io.hpp"
#include "hats/feature_io.hpp"
#include "oracles.hpp"

namespace hats {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / ("hats_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(dir);
  return dir;
}

EventStream sample() {
  const std::vector<RawEvent> raw{{0, 0, 10, 1}, {3, 1, 20, -1}, {2, 2, 20, 1}};
  return validate_stream(raw, {4, 3});
}

TEST(CanonicalBinary, ExactLayout) {
  const std::vector<RawEvent> raw{{3, 4, 100, -1}};
  const std::string bytes = encode_canonical(validate_stream(raw, {640, 480}));
  const std::string expected = std::string("HATSEVT1") + std::string("\x80\x02\xE0\x01", 4) +
                               std::string("\x01\0\0\0\0\0\0\0", 8) + std::string("\x03\0\x04\0", 4) +
                               std::string("\x64\0\0\0\0\0\0\0", 8) + std::string("\xFF", 1);
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(bytes.size(), kEventHeaderBytes + kEventRecordBytes);
}

TEST(CanonicalBinary, FileRoundTrip) {
  const auto dir = temp_dir();
  const auto s = sample();
  write_events(s, dir / "a.hev", EventFormat::CanonicalBinary);
  EXPECT_EQ(read_events(dir / "a.hev", EventFormat::CanonicalBinary), s);
  fs::remove_all(dir);
}

TEST(CanonicalBinary, RoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = testing::random_stream({1 + std::uint32_t(seed % 40), 1 + std::uint32_t(seed % 7), 200, 1000, 0}, seed);
    EXPECT_EQ(decode_canonical(encode_canonical(s)), s);
    EXPECT_EQ(decode_csv(encode_csv(s), s.geometry()), s);
  }
}

TEST(CanonicalBinary, RejectsBadHeaderAndTruncation) {
  std::string bytes = encode_canonical(sample());
  try {
    decode_canonical("HATSEVT0" + bytes.substr(8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedHeader);
  }
  try {
    decode_canonical(bytes.substr(0, bytes.size() - 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedRecord);
  }
}

TEST(CanonicalBinary, PropagatesValidationErrors) {
  std::string bytes = encode_canonical(sample());
  bytes[kEventHeaderBytes + kEventRecordBytes + 12] = 0;  // polarity of record 1
  try {
    decode_canonical(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPolarity);
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Csv, FieldMapping) {
  const auto s = decode_csv("x,y,t,p\n3,4,100,-1\n", SensorGeometry{8, 8});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Event{3, 4, 100, Polarity::Off}));
}

TEST(Csv, InfersGeometryAndAcceptsCrLf) {
  const auto s = decode_csv("x,y,t,p\r\n3,4,100,-1\r\n0,0,101,1\r\n");
  EXPECT_EQ(s.geometry(), (SensorGeometry{4, 5}));
  EXPECT_EQ(s.size(), 2u);
}

TEST(Csv, Errors) {
  EXPECT_THROW(decode_csv("a,b,c,d\n1,1,1,1\n"), Error);
  try {
    decode_csv("x,y,t,p\n1,1,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedRecord);
  }
  try {
    decode_csv("x,y,t,p\n1,1,10,1\n1,1,5,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotonicTimestamps);
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Nmnist, DecodesRecordByHand) {
  // byte0 x=5, byte1 y=7, byte2 bit7 = ON, t = 0x000064 = 100
  const std::string rec("\x05\x07\x80\x00\x64", 5);
  const auto s = decode_nmnist(rec);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Event{5, 7, 100, Polarity::On}));
  EXPECT_EQ(s.geometry(), kNmnistGeometry);
}

TEST(Nmnist, OffPolarityAndWideTimestamp) {
  // t = 0x7FFFFF uses all 23 bits; polarity bit clear -> OFF
  const std::string rec("\x01\x02\x7F\xFF\xFF", 5);
  const auto s = decode_nmnist(rec);
  EXPECT_EQ(s[0], (Event{1, 2, 0x7FFFFF, Polarity::Off}));
}

TEST(Nmnist, RejectsPartialRecordAndIsReadOnly) {
  EXPECT_THROW(decode_nmnist(std::string("\x05\x07\x80\x00", 4)), Error);
  const auto dir = temp_dir();
  EXPECT_THROW(write_events(sample(), dir / "x.bin", EventFormat::Nmnist), Error);
  fs::remove_all(dir);
}

TEST(FeatureFile, ExactLayoutAndRoundTrip) {
  FeatureMatrix m(0, 2);
  m.append_row(std::vector<double>{1.0, 0.1});
  m.append_row(std::vector<double>{-0.0, 3.5e-300});
  const std::string bytes = encode_features(m);
  EXPECT_EQ(bytes.substr(0, 8), "HATSFTR1");
  EXPECT_EQ(bytes.substr(8, 8), std::string("\x02\0\0\0\x02\0\0\0", 8));
  EXPECT_EQ(bytes.substr(16, 8), std::string("\0\0\0\0\0\0\xF0\x3F", 8));  // 1.0
  EXPECT_EQ(bytes.size(), 16u + 4 * 8);
  EXPECT_EQ(decode_features(bytes), m);
  const std::vector<std::uint32_t> labels{0, 1, 7};
  EXPECT_EQ(decode_labels(encode_labels(labels)), labels);
  EXPECT_THROW(decode_features(bytes.substr(0, bytes.size() - 3)), Error);
}

}  // namespace
}  // namespace hats
