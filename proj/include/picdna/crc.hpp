#pragma once

#include <cstdint>
#include <span>

namespace picdna {

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout.
constexpr std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data, std::uint16_t crc = 0xFFFF) {
  for (const auto byte : data) {
    crc ^= std::uint16_t(byte) << 8;
    for (int i = 0; i < 8; ++i) crc = (crc & 0x8000) ? std::uint16_t((crc << 1) ^ 0x1021) : std::uint16_t(crc << 1);
  }
  return crc;
}

}  // namespace picdna
