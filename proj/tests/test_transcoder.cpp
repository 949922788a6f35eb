#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>

#include "picdna/crc.hpp"
#include "picdna/erasure.hpp"
#include "picdna/transcoder.hpp"
#include "support/expect.hpp"

using namespace picdna;
using fixtures::expect_error;

namespace {

// Most-significant-first digit extraction by powers of three; independent of
// the implementation's repeated mod/div.
std::vector<std::uint8_t> oracle_base3(std::uint32_t v) {
  std::vector<std::uint8_t> digits;
  std::uint64_t p = 1;
  for (int i = 0; i < 15; ++i) p *= 3;
  for (int i = 0; i < 16; ++i) {
    std::uint8_t d = 0;
    while (v >= p) {
      v -= std::uint32_t(p);
      ++d;
    }
    digits.push_back(d);
    p /= 3;
  }
  return digits;
}

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = std::uint8_t(rng());
  return v;
}

}  // namespace

TEST(Crc16, StandardCheckValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc16_ccitt_false({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0x29B1);
}

TEST(Trits, ZeroAndOne) {
  const std::vector<std::uint8_t> zero{0, 0, 0}, one{0, 0, 1};
  EXPECT_EQ(bytes_to_trits(zero), std::vector<std::uint8_t>(16, 0));
  std::vector<std::uint8_t> expected(16, 0);
  expected[15] = 1;
  EXPECT_EQ(bytes_to_trits(one), expected);
  EXPECT_EQ(trits_to_bytes(bytes_to_trits(zero)), zero);
  EXPECT_EQ(trits_to_bytes(bytes_to_trits(one)), one);
}

TEST(Trits, MaxGroupMatchesOracle) {
  const std::vector<std::uint8_t> ff{0xFF, 0xFF, 0xFF};
  EXPECT_EQ(bytes_to_trits(ff), oracle_base3(16777215u));
  EXPECT_EQ(trits_to_bytes(bytes_to_trits(ff)), ff);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto v = std::uint32_t(rng() & 0xFFFFFF);
    const std::vector<std::uint8_t> b{std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
    ASSERT_EQ(bytes_to_trits(b), oracle_base3(v));
  }
}

TEST(Trits, ContractErrors) {
  const std::vector<std::uint8_t> four(4, 0);
  expect_error(ErrorCode::padding_contract, [&] { bytes_to_trits(four); });
  expect_error(ErrorCode::padding_contract, [&] { trits_to_bytes(std::vector<std::uint8_t>(15, 0)); });
  // 3^16 - 1 = 43,046,720 >= 2^24
  expect_error(ErrorCode::corruption, [&] { trits_to_bytes(std::vector<std::uint8_t>(16, 2)); }, 0);
}

TEST(Trits, RandomBlocksRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto b = random_bytes(rng, 36);
    ASSERT_EQ(trits_to_bytes(bytes_to_trits(b)), b);
  }
}

TEST(RotatingCode, HandExamples) {
  const std::vector<std::uint8_t> t012{0, 1, 2}, t000{0, 0, 0};
  EXPECT_EQ(trits_to_nucleotides(t012, 'A'), "CGT");
  EXPECT_EQ(trits_to_nucleotides(t000, 'A'), "CAC");
  EXPECT_EQ(nucleotides_to_trits("CGT", 'A'), t012);
  EXPECT_EQ(nucleotides_to_trits("CAC", 'A'), t000);
  const std::vector<std::uint8_t> t222{2, 2, 2};
  EXPECT_EQ(nucleotides_to_trits(trits_to_nucleotides(t222, 'T'), 'T'), t222);
}

TEST(RotatingCode, RejectsRepeats) {
  expect_error(ErrorCode::decode, [] { nucleotides_to_trits("CAA", 'G'); }, 2);
  expect_error(ErrorCode::decode, [] { nucleotides_to_trits("AC", 'A'); }, 0);
  expect_error(ErrorCode::decode, [] { nucleotides_to_trits("CNA", 'A'); }, 1);
  expect_error(ErrorCode::contract, [] { trits_to_nucleotides(std::vector<std::uint8_t>{0}, 'X'); });
}

TEST(RotatingCode, NeverEmitsHomopolymers) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> t(300);
    for (auto& x : t) x = std::uint8_t(rng() % 3);
    const char prev = nucleotides[rng() % 4];
    const auto s = trits_to_nucleotides(t, prev);
    ASSERT_NE(s.front(), prev);
    for (std::size_t j = 1; j < s.size(); ++j) ASSERT_NE(s[j], s[j - 1]);
    ASSERT_EQ(nucleotides_to_trits(s, prev), t);
  }
}

TEST(Blocks, SplitCounts) {
  std::vector<std::uint8_t> s30(30, 7), s31(31, 7);
  auto b30 = blocks_from_stream(s30);
  ASSERT_EQ(b30.size(), 1u);
  EXPECT_EQ(b30[0].index, 0u);
  auto b31 = blocks_from_stream(s31);
  ASSERT_EQ(b31.size(), 2u);
  EXPECT_EQ(b31[1].index, 1u);
  EXPECT_EQ(b31[1].payload[0], 7);
  EXPECT_TRUE(std::all_of(b31[1].payload.begin() + 1, b31[1].payload.end(), [](auto v) { return v == 0; }));
  EXPECT_TRUE(blocks_from_stream({}).empty());
  for (const auto& b : b31) EXPECT_TRUE(crc_ok(b));
}

TEST(Blocks, NucleotideFormIs192AndHomopolymerFree) {
  std::mt19937_64 rng(9);
  const auto stream = random_bytes(rng, 3000);
  for (const auto& b : blocks_from_stream(stream)) {
    const char prev = nucleotides[rng() % 4];
    const auto nts = encode_block_nucleotides(b, prev);
    ASSERT_EQ(nts.size(), block_nucleotides);
    ASSERT_NE(nts.front(), prev);
    for (std::size_t i = 1; i < nts.size(); ++i) ASSERT_NE(nts[i], nts[i - 1]);
    ASSERT_EQ(decode_block_nucleotides(nts, prev), b);
    ASSERT_EQ(try_decode_block(nts, prev), b);
  }
}

TEST(Blocks, WireLayoutIsBigEndian) {
  const std::vector<std::uint8_t> payload(30, 0xAB);
  const auto b = make_block(0x01020304u, payload);
  const auto bytes = serialize_block(b);
  EXPECT_EQ(bytes[0], 1);
  EXPECT_EQ(bytes[3], 4);
  EXPECT_EQ(bytes[4], b.crc >> 8);
  EXPECT_EQ(bytes[5], b.crc & 0xff);
  EXPECT_EQ(bytes[6], 0xAB);
  EXPECT_EQ(parse_block(bytes), b);
}

TEST(Streams, RoundTripAfterShuffle) {
  std::mt19937_64 rng(21);
  for (std::size_t len : {0u, 1u, 29u, 30u, 31u, 59u, 60u, 1000u}) {
    const auto stream = random_bytes(rng, len);
    auto blocks = blocks_from_stream(stream);
    std::shuffle(blocks.begin(), blocks.end(), rng);
    auto out = stream_from_blocks(blocks);
    ASSERT_GE(out.size(), len);
    EXPECT_TRUE(std::all_of(out.begin() + std::ptrdiff_t(len), out.end(), [](auto v) { return v == 0; }));
    out.resize(len);
    EXPECT_EQ(out, stream);
  }
}

TEST(Streams, GapIsNamed) {
  std::vector<std::uint8_t> s(90, 1);
  auto blocks = blocks_from_stream(s);
  blocks.erase(blocks.begin() + 1);
  expect_error(ErrorCode::gap, [&] { stream_from_blocks(blocks); }, 1);
}

TEST(Streams, FlippedPayloadByteFailsIntegrity) {
  std::vector<std::uint8_t> s(90, 1);
  auto blocks = blocks_from_stream(s);
  blocks[2].payload[17] ^= 0x40;
  EXPECT_NE(block_crc(blocks[2].index, blocks[2].payload), blocks[2].crc);
  expect_error(ErrorCode::integrity, [&] { stream_from_blocks(blocks); }, 2);
}

TEST(Streams, CrcCatchesEverySingleByteCorruption) {
  std::mt19937_64 rng(4);
  const auto block = make_block(1234, random_bytes(rng, 30));
  const auto wire = serialize_block(block);
  for (std::size_t pos = 0; pos < block_bytes; ++pos) {
    for (unsigned x = 1; x < 256; ++x) {
      auto w = wire;
      w[pos] ^= std::uint8_t(x);
      ASSERT_FALSE(crc_ok(parse_block(w))) << "pos " << pos << " xor " << x;
    }
  }
}

TEST(Erasure, ParityIndexPacking) {
  const ParityIndex p{32, 4095, 17, 7};
  const auto idx = pack_parity_index(p);
  EXPECT_TRUE(is_parity_index(idx));
  const auto q = unpack_parity_index(idx);
  EXPECT_EQ(q.stride, 32u);
  EXPECT_EQ(q.group, 4095u);
  EXPECT_EQ(q.count, 17u);
  EXPECT_EQ(q.row, 7u);
  EXPECT_FALSE(is_parity_index(0x7fffffffu));
}

TEST(Erasure, RecoversUpToParityCountPerGroup) {
  std::mt19937_64 rng(77);
  const ParityConfig cfg{16, 4};
  for (int trial = 0; trial < 40; ++trial) {
    const auto stream = random_bytes(rng, 30 * (1 + rng() % 70) - rng() % 30);
    const auto data = blocks_from_stream(stream);
    const auto parity = make_parity_blocks(data, cfg);
    ASSERT_EQ(parity.size(), ((data.size() + 15) / 16) * 4);

    std::vector<DataBlock> received;
    for (std::size_t g = 0; g * 16 < data.size(); ++g) {
      const std::size_t count = std::min<std::size_t>(16, data.size() - g * 16);
      std::vector<DataBlock> group(data.begin() + std::ptrdiff_t(g * 16),
                                   data.begin() + std::ptrdiff_t(g * 16 + count));
      group.insert(group.end(), parity.begin() + std::ptrdiff_t(g * 4), parity.begin() + std::ptrdiff_t(g * 4 + 4));
      std::shuffle(group.begin(), group.end(), rng);
      group.resize(group.size() - std::min<std::size_t>(4, rng() % 5));  // drop at most 4
      received.insert(received.end(), group.begin(), group.end());
    }
    const auto result = repair_erasures(received);
    EXPECT_EQ(result.unrecoverable_groups, 0u);
    ASSERT_EQ(result.data, data);
    EXPECT_EQ(implied_data_count(received), data.size());
  }
}

TEST(Erasure, ReportsGroupsWithTooManyLosses) {
  std::mt19937_64 rng(3);
  const auto data = blocks_from_stream(random_bytes(rng, 30 * 20));
  const auto parity = make_parity_blocks(data, {10, 2});
  std::vector<DataBlock> received(data.begin() + 3, data.end());  // 3 losses in group 0
  received.insert(received.end(), parity.begin(), parity.end());
  const auto result = repair_erasures(received);
  EXPECT_EQ(result.unrecoverable_groups, 1u);
  EXPECT_EQ(result.data.size(), 17u);
}

TEST(Erasure, DisabledConfigEmitsNothing) {
  std::vector<std::uint8_t> s(300, 1);
  EXPECT_TRUE(make_parity_blocks(blocks_from_stream(s), {32, 0}).empty());
  EXPECT_THROW(make_parity_blocks(blocks_from_stream(s), {200, 4}), Error);
}
