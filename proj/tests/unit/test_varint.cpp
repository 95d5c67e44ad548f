#include <gtest/gtest.h>

#include <limits>

#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"
#include "traceoracle/varint.hpp"

using namespace traceoracle;

TEST(Varint, KnownEncodings) {
  std::vector<std::uint8_t> out;
  varint::put(out, 0);
  varint::put(out, 127);
  varint::put(out, 128);
  varint::put(out, 300);
  EXPECT_EQ(out, (std::vector<std::uint8_t>{0x00, 0x7F, 0x80, 0x01, 0xAC, 0x02}));
}

TEST(Varint, RandomValuesRoundTrip) {
  Rng rng(11);
  std::vector<std::uint64_t> values = {0, 1, std::numeric_limits<std::uint64_t>::max()};
  for (int i = 0; i < 500; ++i) values.push_back(rng.next() >> rng.below(64));
  std::vector<std::uint8_t> out;
  for (auto v : values) varint::put(out, v);
  varint::Reader in(out);
  for (auto v : values) EXPECT_EQ(in.u64(), v);
  EXPECT_TRUE(in.at_end());
}

TEST(Varint, MaxValueUsesTenBytes) {
  std::vector<std::uint8_t> out;
  varint::put(out, std::numeric_limits<std::uint64_t>::max());
  EXPECT_EQ(out.size(), varint::kMaxBytes);
  EXPECT_EQ(out.back(), 0x01);
}

TEST(Varint, OverflowAndTruncation) {
  const std::vector<std::uint8_t> too_big = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0x02};
  try {
    varint::Reader(too_big).u64();
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::VarintOverflow);
    EXPECT_EQ(e.offset(), 0u);
  }
  const std::vector<std::uint8_t> cut = {0x05, 0x80};
  varint::Reader in(cut);
  EXPECT_EQ(in.u64(), 5u);
  try {
    in.u64();
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedRecord);
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(Varint, Strings) {
  std::vector<std::uint8_t> out;
  varint::put_string(out, "");
  varint::put_string(out, "chan\nrecv");
  varint::Reader in(out);
  EXPECT_EQ(in.string(), "");
  EXPECT_EQ(in.string(), "chan\nrecv");
  const std::vector<std::uint8_t> short_string = {0x05, 'a', 'b'};
  EXPECT_THROW(varint::Reader(short_string).string(), ParseError);
}
