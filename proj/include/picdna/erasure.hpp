#pragma once

// Per-layer erasure protection: systematic Cauchy Reed-Solomon over GF(2^8)
// applied column-wise to the 30-byte payloads of consecutive data blocks.
// Each group of up to `group_data` data blocks gets `group_parity` parity
// blocks; any `group_data` of the group's blocks recover the rest.
//
// Parity blocks are ordinary DataBlocks with bit 31 of the index set:
//
//   bit 31      parity flag
//   bits 30..24 group stride G (data blocks per full group)
//   bits 23..11 group number g (data indices g*G .. g*G+count-1)
//   bits 10..4  count, the number of data blocks in this group
//   bits  3..0  parity row j
//
// so a decoder needs nothing but the blocks themselves.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "picdna/error.hpp"
#include "picdna/transcoder.hpp"

namespace picdna {

struct ParityConfig {
  std::uint32_t group_data = 32;
  std::uint32_t group_parity = 8;

  bool enabled() const { return group_parity > 0; }
  void validate() const {
    if (!enabled()) return;
    if (group_data < 1 || group_data > 127) throw Error(ErrorCode::contract, "parity group_data must be in [1, 127]");
    if (group_parity > 15) throw Error(ErrorCode::contract, "parity group_parity must be in [0, 15]");
  }
  friend bool operator==(const ParityConfig&, const ParityConfig&) = default;
};

namespace gf256 {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
};

constexpr Tables make_tables() {
  Tables t{};
  unsigned x = 1;
  for (unsigned i = 0; i < 255; ++i) {
    t.exp[i] = std::uint8_t(x);
    t.log[x] = std::uint8_t(i);
    x <<= 1;
    if (x & 0x100) x ^= 0x11D;
  }
  for (unsigned i = 255; i < 512; ++i) t.exp[i] = t.exp[i - 255];
  return t;
}

inline constexpr Tables tables = make_tables();

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  return tables.exp[unsigned(tables.log[a]) + tables.log[b]];
}

constexpr std::uint8_t inv(std::uint8_t a) { return tables.exp[255 - tables.log[a]]; }

// Cauchy element 1 / (x_j + y_i) with x_j = G + j and y_i = i.
constexpr std::uint8_t cauchy(std::uint32_t stride, std::uint32_t row, std::uint32_t col) {
  return inv(std::uint8_t((stride + row) ^ col));
}

}  // namespace gf256

struct ParityIndex {
  std::uint32_t stride = 0;
  std::uint32_t group = 0;
  std::uint32_t count = 0;
  std::uint32_t row = 0;
};

constexpr bool is_parity_index(std::uint32_t index) { return (index & 0x80000000u) != 0; }

constexpr std::uint32_t pack_parity_index(const ParityIndex& p) {
  return 0x80000000u | (p.stride << 24) | (p.group << 11) | (p.count << 4) | p.row;
}

constexpr ParityIndex unpack_parity_index(std::uint32_t index) {
  return {(index >> 24) & 0x7f, (index >> 11) & 0x1fff, (index >> 4) & 0x7f, index & 0xf};
}

/// Parity blocks for a layer's data blocks (which must be indexed 0..n-1).
inline std::vector<DataBlock> make_parity_blocks(std::span<const DataBlock> data, const ParityConfig& cfg) {
  cfg.validate();
  std::vector<DataBlock> parity;
  if (!cfg.enabled()) return parity;
  const std::uint32_t stride = cfg.group_data;
  const std::size_t groups = (data.size() + stride - 1) / stride;
  if (groups > 0x2000) throw Error(ErrorCode::capacity, "layer too large for the parity index space");
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t first = g * stride;
    const std::size_t count = std::min<std::size_t>(stride, data.size() - first);
    for (std::uint32_t j = 0; j < cfg.group_parity; ++j) {
      std::array<std::uint8_t, block_payload_bytes> acc{};
      for (std::size_t i = 0; i < count; ++i) {
        const auto c = gf256::cauchy(stride, j, std::uint32_t(i));
        const auto& src = data[first + i].payload;
        for (std::size_t b = 0; b < block_payload_bytes; ++b) acc[b] ^= gf256::mul(c, src[b]);
      }
      const auto idx = pack_parity_index({stride, std::uint32_t(g), std::uint32_t(count), j});
      parity.push_back(make_block(idx, acc));
    }
  }
  return parity;
}

struct RepairResult {
  std::vector<DataBlock> data;    // CRC-valid data blocks, sorted by index
  std::size_t recovered = 0;      // data blocks rebuilt from parity
  std::size_t unrecoverable_groups = 0;
};

/// Rebuilds missing data blocks from whatever parity blocks arrived.
/// Input blocks must already be CRC-verified; parity for groups with no
/// erasures is simply dropped.
inline RepairResult repair_erasures(std::span<const DataBlock> blocks) {
  std::map<std::uint32_t, DataBlock> data;
  struct Group {
    std::uint32_t stride = 0, count = 0;
    std::map<std::uint32_t, const DataBlock*> rows;
  };
  std::map<std::uint32_t, Group> groups;
  for (const auto& b : blocks) {
    if (!is_parity_index(b.index)) {
      data.emplace(b.index, b);
      continue;
    }
    const auto p = unpack_parity_index(b.index);
    if (p.stride == 0 || p.count == 0 || p.count > p.stride) continue;
    auto& g = groups[p.group];
    if (g.stride == 0) {
      g.stride = p.stride;
      g.count = p.count;
    }
    if (g.stride == p.stride && g.count == p.count) g.rows.emplace(p.row, &b);
  }

  RepairResult result;
  for (const auto& [gid, g] : groups) {
    const std::uint32_t first = gid * g.stride;
    std::vector<std::uint32_t> missing;
    for (std::uint32_t i = 0; i < g.count; ++i)
      if (!data.count(first + i)) missing.push_back(i);
    if (missing.empty()) continue;
    if (g.rows.size() < missing.size()) {
      ++result.unrecoverable_groups;
      continue;
    }
    const std::size_t e = missing.size();
    std::vector<std::uint32_t> rows;
    for (const auto& [r, _] : g.rows) {
      if (rows.size() == e) break;
      rows.push_back(r);
    }

    // rhs[r] = parity_r - sum over received data of c(r,i) d_i
    std::vector<std::array<std::uint8_t, block_payload_bytes>> rhs(e);
    for (std::size_t r = 0; r < e; ++r) {
      rhs[r] = g.rows.at(rows[r])->payload;
      for (std::uint32_t i = 0; i < g.count; ++i) {
        const auto it = data.find(first + i);
        if (it == data.end()) continue;
        const auto c = gf256::cauchy(g.stride, rows[r], i);
        for (std::size_t b = 0; b < block_payload_bytes; ++b) rhs[r][b] ^= gf256::mul(c, it->second.payload[b]);
      }
    }
    // Gauss-Jordan on the e x e Cauchy submatrix (always invertible).
    std::vector<std::vector<std::uint8_t>> m(e, std::vector<std::uint8_t>(e));
    for (std::size_t r = 0; r < e; ++r)
      for (std::size_t c = 0; c < e; ++c) m[r][c] = gf256::cauchy(g.stride, rows[r], missing[c]);
    for (std::size_t col = 0; col < e; ++col) {
      std::size_t pivot = col;
      while (pivot < e && m[pivot][col] == 0) ++pivot;
      if (pivot == e) throw Error(ErrorCode::structure, "singular erasure system");
      std::swap(m[pivot], m[col]);
      std::swap(rhs[pivot], rhs[col]);
      const auto scale = gf256::inv(m[col][col]);
      for (auto& v : m[col]) v = gf256::mul(v, scale);
      for (auto& v : rhs[col]) v = gf256::mul(v, scale);
      for (std::size_t r = 0; r < e; ++r) {
        if (r == col || m[r][col] == 0) continue;
        const auto f = m[r][col];
        for (std::size_t c = 0; c < e; ++c) m[r][c] ^= gf256::mul(f, m[col][c]);
        for (std::size_t b = 0; b < block_payload_bytes; ++b) rhs[r][b] ^= gf256::mul(f, rhs[col][b]);
      }
    }
    for (std::size_t c = 0; c < e; ++c) {
      data.emplace(first + missing[c], make_block(first + missing[c], rhs[c]));
      ++result.recovered;
    }
  }
  for (auto& [_, b] : data) result.data.push_back(b);
  return result;
}

/// Number of data blocks a layer must contain, as far as the received
/// blocks reveal it (highest data index seen or implied by a parity group).
inline std::uint32_t implied_data_count(std::span<const DataBlock> blocks) {
  std::uint32_t n = 0;
  for (const auto& b : blocks) {
    if (is_parity_index(b.index)) {
      const auto p = unpack_parity_index(b.index);
      n = std::max(n, p.group * p.stride + p.count);
    } else {
      n = std::max(n, b.index + 1);
    }
  }
  return n;
}

}  // namespace picdna
