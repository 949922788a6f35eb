#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "picdna/error.hpp"

namespace picdna {

// MSB-first bit packing.
class BitWriter {
 public:
  void put_bit(bool bit) {
    if (bit_count_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= std::uint8_t(0x80u >> (bit_count_ % 8));
    ++bit_count_;
  }

  void put_bits(std::uint32_t value, unsigned count) {
    for (unsigned i = count; i-- > 0;) put_bit((value >> i) & 1u);
  }

  void put_unary(std::uint32_t ones) {
    for (std::uint32_t i = 0; i < ones; ++i) put_bit(true);
    put_bit(false);
  }

  std::size_t bit_count() const { return bit_count_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_count_ = 0;
};

// Reads a bounded window of bits; running past `limit` is a parse error,
// never undefined behaviour.
class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_offset, std::size_t bit_limit)
      : bytes_(bytes), pos_(bit_offset), end_(bit_offset + bit_limit) {
    if (end_ > bytes.size() * 8) throw Error(ErrorCode::parse, "bit window exceeds buffer");
  }

  bool get_bit() {
    if (pos_ >= end_) throw Error(ErrorCode::parse, "bitstream exhausted");
    const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return bit;
  }

  std::uint32_t get_bits(unsigned count) {
    std::uint32_t v = 0;
    for (unsigned i = 0; i < count; ++i) v = (v << 1) | std::uint32_t(get_bit());
    return v;
  }

  std::uint32_t get_unary(std::uint32_t max_ones) {
    std::uint32_t n = 0;
    while (get_bit()) {
      if (++n > max_ones) throw Error(ErrorCode::parse, "unary run too long");
    }
    return n;
  }

  std::size_t remaining() const { return end_ - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace picdna
