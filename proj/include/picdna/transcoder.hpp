#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picdna/crc.hpp"
#include "picdna/error.hpp"

namespace picdna {

// Block geometry. 36 bytes = 12 groups of 3 bytes = 12 x 16 trits = 192 nt.
inline constexpr std::size_t block_header_bytes = 6;
inline constexpr std::size_t block_payload_bytes = 30;
inline constexpr std::size_t block_bytes = block_header_bytes + block_payload_bytes;
inline constexpr std::size_t trits_per_group = 16;
inline constexpr std::size_t bytes_per_group = 3;
inline constexpr std::size_t block_nucleotides = block_bytes / bytes_per_group * trits_per_group;
static_assert(block_bytes % bytes_per_group == 0);
static_assert(block_nucleotides == 192);

inline constexpr std::array<char, 4> nucleotides{'A', 'C', 'G', 'T'};

inline bool is_nucleotide(char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }

// ---------------------------------------------------------------------------
// Bytes <-> trits

/// Each big-endian 3-byte group becomes 16 base-3 digits, most significant first.
inline std::vector<std::uint8_t> bytes_to_trits(std::span<const std::uint8_t> data) {
  if (data.size() % bytes_per_group != 0)
    throw Error(ErrorCode::padding_contract, "byte count must be a multiple of 3");
  std::vector<std::uint8_t> trits(data.size() / bytes_per_group * trits_per_group);
  for (std::size_t g = 0; g < data.size() / bytes_per_group; ++g) {
    std::uint32_t v = (std::uint32_t(data[3 * g]) << 16) | (std::uint32_t(data[3 * g + 1]) << 8) | data[3 * g + 2];
    for (std::size_t t = trits_per_group; t-- > 0;) {
      trits[g * trits_per_group + t] = std::uint8_t(v % 3);
      v /= 3;
    }
  }
  return trits;
}

inline std::vector<std::uint8_t> trits_to_bytes(std::span<const std::uint8_t> trits) {
  if (trits.size() % trits_per_group != 0)
    throw Error(ErrorCode::padding_contract, "trit count must be a multiple of 16");
  std::vector<std::uint8_t> out;
  out.reserve(trits.size() / trits_per_group * bytes_per_group);
  for (std::size_t g = 0; g < trits.size() / trits_per_group; ++g) {
    std::uint64_t v = 0;
    for (std::size_t t = 0; t < trits_per_group; ++t) {
      const auto d = trits[g * trits_per_group + t];
      if (d > 2) throw Error(ErrorCode::corruption, "trit out of range", long(g));
      v = v * 3 + d;
    }
    if (v >= (1u << 24)) throw Error(ErrorCode::corruption, "trit group exceeds 24 bits", long(g));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rotating code: trit t selects the t-th of the three nucleotides that differ
// from the previous one (in A < C < G < T order).

inline char rotate_forward(char prev, std::uint8_t trit) {
  std::uint8_t seen = 0;
  for (const char n : nucleotides) {
    if (n == prev) continue;
    if (seen++ == trit) return n;
  }
  return '?';
}

inline std::string trits_to_nucleotides(std::span<const std::uint8_t> trits, char prev) {
  if (!is_nucleotide(prev)) throw Error(ErrorCode::contract, "previous nucleotide must be one of ACGT");
  std::string out;
  out.reserve(trits.size());
  for (const auto t : trits) {
    if (t > 2) throw Error(ErrorCode::contract, "trit out of range");
    prev = rotate_forward(prev, t);
    out.push_back(prev);
  }
  return out;
}

inline std::vector<std::uint8_t> nucleotides_to_trits(std::string_view nts, char prev) {
  if (!is_nucleotide(prev)) throw Error(ErrorCode::contract, "previous nucleotide must be one of ACGT");
  std::vector<std::uint8_t> trits;
  trits.reserve(nts.size());
  for (std::size_t i = 0; i < nts.size(); ++i) {
    const char n = nts[i];
    if (!is_nucleotide(n)) throw Error(ErrorCode::decode, "invalid nucleotide", long(i));
    if (n == prev) throw Error(ErrorCode::decode, "repeated nucleotide", long(i));
    std::uint8_t t = 0;
    for (const char c : nucleotides) {
      if (c == n) break;
      if (c != prev) ++t;
    }
    trits.push_back(t);
    prev = n;
  }
  return trits;
}

// ---------------------------------------------------------------------------
// Data blocks

/// Wire layout: index u32 BE | crc u16 BE | payload[30]; the CRC covers
/// index || payload.
struct DataBlock {
  std::uint32_t index = 0;
  std::uint16_t crc = 0;
  std::array<std::uint8_t, block_payload_bytes> payload{};

  friend bool operator==(const DataBlock&, const DataBlock&) = default;
};

inline std::uint16_t block_crc(std::uint32_t index, std::span<const std::uint8_t, block_payload_bytes> payload) {
  const std::array<std::uint8_t, 4> idx{std::uint8_t(index >> 24), std::uint8_t(index >> 16), std::uint8_t(index >> 8),
                                        std::uint8_t(index)};
  return crc16_ccitt_false(payload, crc16_ccitt_false(idx));
}

inline bool crc_ok(const DataBlock& b) { return block_crc(b.index, b.payload) == b.crc; }

inline DataBlock make_block(std::uint32_t index, std::span<const std::uint8_t> payload) {
  DataBlock b;
  b.index = index;
  std::copy_n(payload.begin(), std::min(payload.size(), block_payload_bytes), b.payload.begin());
  b.crc = block_crc(b.index, b.payload);
  return b;
}

inline std::array<std::uint8_t, block_bytes> serialize_block(const DataBlock& b) {
  std::array<std::uint8_t, block_bytes> out{};
  out[0] = std::uint8_t(b.index >> 24);
  out[1] = std::uint8_t(b.index >> 16);
  out[2] = std::uint8_t(b.index >> 8);
  out[3] = std::uint8_t(b.index);
  out[4] = std::uint8_t(b.crc >> 8);
  out[5] = std::uint8_t(b.crc);
  std::copy(b.payload.begin(), b.payload.end(), out.begin() + block_header_bytes);
  return out;
}

inline DataBlock parse_block(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != block_bytes) throw Error(ErrorCode::parse, "serialized block must be 36 bytes");
  DataBlock b;
  b.index = (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) | (std::uint32_t(bytes[2]) << 8) | bytes[3];
  b.crc = std::uint16_t((bytes[4] << 8) | bytes[5]);
  std::copy(bytes.begin() + block_header_bytes, bytes.end(), b.payload.begin());
  return b;
}

/// Block -> 192 nt, rotating code seeded by `prev` (the nucleotide that
/// precedes the block in the oligo).
inline std::string encode_block_nucleotides(const DataBlock& b, char prev) {
  const auto bytes = serialize_block(b);
  return trits_to_nucleotides(bytes_to_trits(bytes), prev);
}

/// Inverse of encode_block_nucleotides. Does not check the CRC.
inline DataBlock decode_block_nucleotides(std::string_view nts, char prev) {
  if (nts.size() != block_nucleotides) throw Error(ErrorCode::decode, "block must be 192 nucleotides");
  return parse_block(trits_to_bytes(nucleotides_to_trits(nts, prev)));
}

/// Non-throwing decode; nullopt on any structural error or CRC mismatch.
inline std::optional<DataBlock> try_decode_block(std::string_view nts, char prev) {
  if (nts.size() != block_nucleotides) return std::nullopt;
  std::array<std::uint8_t, block_bytes> bytes{};
  for (std::size_t g = 0; g < block_bytes / bytes_per_group; ++g) {
    std::uint64_t v = 0;
    for (std::size_t t = 0; t < trits_per_group; ++t) {
      const char n = nts[g * trits_per_group + t];
      if (n == prev || !is_nucleotide(n)) return std::nullopt;
      std::uint8_t d = 0;
      for (const char c : nucleotides) {
        if (c == n) break;
        if (c != prev) ++d;
      }
      v = v * 3 + d;
      prev = n;
    }
    if (v >= (1u << 24)) return std::nullopt;
    bytes[3 * g] = std::uint8_t(v >> 16);
    bytes[3 * g + 1] = std::uint8_t(v >> 8);
    bytes[3 * g + 2] = std::uint8_t(v);
  }
  auto b = parse_block(bytes);
  if (!crc_ok(b)) return std::nullopt;
  return b;
}

// ---------------------------------------------------------------------------
// Streams

/// Splits a layer byte stream into 30-byte payload blocks (last one
/// zero-padded), indexed 0, 1, 2, ...
inline std::vector<DataBlock> blocks_from_stream(std::span<const std::uint8_t> stream) {
  std::vector<DataBlock> blocks;
  blocks.reserve((stream.size() + block_payload_bytes - 1) / block_payload_bytes);
  for (std::size_t off = 0, i = 0; off < stream.size(); off += block_payload_bytes, ++i)
    blocks.push_back(make_block(std::uint32_t(i), stream.subspan(off, std::min(block_payload_bytes, stream.size() - off))));
  return blocks;
}

/// Reassembles a stream: sorts by index, re-verifies every CRC and requires
/// indices 0..max without gaps. Identical duplicates are tolerated.
inline std::vector<std::uint8_t> stream_from_blocks(std::vector<DataBlock> blocks) {
  std::sort(blocks.begin(), blocks.end(), [](const DataBlock& a, const DataBlock& b) { return a.index < b.index; });
  for (const auto& b : blocks)
    if (!crc_ok(b)) throw Error(ErrorCode::integrity, "CRC mismatch in block " + std::to_string(b.index), b.index);
  std::vector<std::uint8_t> out;
  std::uint32_t expected = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (i > 0 && b.index == blocks[i - 1].index) {
      if (b != blocks[i - 1])
        throw Error(ErrorCode::integrity, "conflicting copies of block " + std::to_string(b.index), b.index);
      continue;
    }
    if (b.index != expected) throw Error(ErrorCode::gap, "missing block " + std::to_string(expected), expected);
    out.insert(out.end(), b.payload.begin(), b.payload.end());
    ++expected;
  }
  return out;
}

}  // namespace picdna
