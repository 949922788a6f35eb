#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "picdna/bitio.hpp"

namespace picdna::rice {

inline constexpr unsigned max_parameter = 15;

/// v >= 0 -> 2v, v < 0 -> -2v - 1.
constexpr std::uint32_t interleave(std::int32_t v) {
  return v >= 0 ? std::uint32_t(v) * 2u : std::uint32_t(-(std::int64_t(v))) * 2u - 1u;
}

constexpr std::int32_t deinterleave(std::uint32_t u) {
  return (u & 1u) ? -std::int32_t((u + 1u) / 2u) : std::int32_t(u / 2u);
}

inline std::uint64_t encoded_bits(std::span<const std::int32_t> values, unsigned k) {
  std::uint64_t bits = 0;
  for (const auto v : values) bits += (std::uint64_t(interleave(v)) >> k) + 1u + k;
  return bits;
}

/// Exhaustive scan over k in [0, 15]; smallest k wins ties.
inline unsigned best_parameter(std::span<const std::int32_t> values) {
  unsigned best = 0;
  std::uint64_t best_bits = std::numeric_limits<std::uint64_t>::max();
  for (unsigned k = 0; k <= max_parameter; ++k) {
    const auto bits = encoded_bits(values, k);
    if (bits < best_bits) {
      best_bits = bits;
      best = k;
    }
  }
  return best;
}

inline void encode(std::span<const std::int32_t> values, unsigned k, BitWriter& out) {
  for (const auto v : values) {
    const std::uint32_t u = interleave(v);
    out.put_unary(u >> k);
    out.put_bits(u & ((1u << k) - 1u), k);
  }
}

inline std::vector<std::int32_t> decode(BitReader& in, std::size_t count, unsigned k) {
  std::vector<std::int32_t> values(count);
  // Quantized coefficients of 8-bit imagery stay far below 2^20.
  const std::uint32_t max_quotient = (1u << 20) >> k;
  for (auto& v : values) {
    const std::uint32_t q = in.get_unary(max_quotient);
    const std::uint32_t r = in.get_bits(k);
    v = deinterleave((q << k) | r);
  }
  return values;
}

}  // namespace picdna::rice
