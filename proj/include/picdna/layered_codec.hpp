#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picdna/bitio.hpp"
#include "picdna/error.hpp"
#include "picdna/image.hpp"
#include "picdna/rice.hpp"
#include "picdna/wavelet.hpp"

namespace picdna {

// Container layout, all multi-byte fields little-endian:
//
//   "PDL1" | layerIndex u8 | D u8 | channels u8 | width u32 | height u32
//   | records: { delta u16 | riceK u8 (low nibble, high nibble zero) | bitLength u32 }
//   | subband bitstreams back to back, MSB-first, zero-padded to a byte boundary
//
// A subband whose quantized coefficients are all zero is stored with
// bitLength 0 and no bits; any Rice code of a non-empty band needs >= 1 bit
// per coefficient, so the case is unambiguous.
//
// Layer 0 carries one record per channel (LL_D). Layer k >= 1 carries three
// records per channel (HL, LH, HH of level D - k + 1), channel-major.
inline constexpr std::array<std::uint8_t, 4> container_magic{'P', 'D', 'L', '1'};
inline constexpr std::size_t container_fixed_header = 15;
inline constexpr std::size_t container_record_size = 7;

struct SubbandRecord {
  std::uint16_t delta = 1;
  std::uint8_t rice_k = 0;
  std::uint32_t bit_length = 0;
  friend bool operator==(const SubbandRecord&, const SubbandRecord&) = default;
};

struct LayerContainer {
  std::uint8_t layer_index = 0;
  std::uint8_t decompositions = 0;
  std::uint8_t channels = 1;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<SubbandRecord> records;
  std::vector<std::uint8_t> payload;

  std::size_t expected_records() const { return layer_index == 0 ? channels : std::size_t(channels) * 3; }

  std::size_t payload_bits() const {
    std::size_t bits = 0;
    for (const auto& r : records) bits += r.bit_length;
    return bits;
  }

  std::size_t serialized_size() const {
    return container_fixed_header + records.size() * container_record_size + (payload_bits() + 7) / 8;
  }

  friend bool operator==(const LayerContainer&, const LayerContainer&) = default;
};

struct LayeredStream {
  std::vector<LayerContainer> layers;
  std::size_t num_levels() const { return layers.size(); }
};

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(in[off + std::size_t(i)]) << (8 * i);
  return v;
}

// Dimensions (width, height) of the subbands carried by a record.
inline std::pair<std::size_t, std::size_t> record_band_shape(const LayerContainer& c, std::size_t record) {
  const int d_levels = c.decompositions;
  if (c.layer_index == 0)
    return {size_at_level(c.width, d_levels), size_at_level(c.height, d_levels)};
  const int level = d_levels - c.layer_index + 1;
  const std::size_t w = size_at_level(c.width, level - 1);
  const std::size_t h = size_at_level(c.height, level - 1);
  switch (record % 3) {
    case 0: return {high_size(w), low_size(h)};  // HL
    case 1: return {low_size(w), high_size(h)};  // LH
    default: return {high_size(w), high_size(h)};  // HH
  }
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const LayerContainer& c) {
  if (c.records.size() != c.expected_records())
    throw Error(ErrorCode::structure, "container record count does not match its layer");
  std::vector<std::uint8_t> out(container_magic.begin(), container_magic.end());
  out.push_back(c.layer_index);
  out.push_back(c.decompositions);
  out.push_back(c.channels);
  detail::put_le(out, c.width, 4);
  detail::put_le(out, c.height, 4);
  for (const auto& r : c.records) {
    detail::put_le(out, r.delta, 2);
    out.push_back(std::uint8_t(r.rice_k & 0x0f));
    detail::put_le(out, r.bit_length, 4);
  }
  const std::size_t payload_bytes = (c.payload_bits() + 7) / 8;
  if (c.payload.size() < payload_bytes) throw Error(ErrorCode::structure, "container payload shorter than its bit lengths");
  out.insert(out.end(), c.payload.begin(), c.payload.begin() + std::ptrdiff_t(payload_bytes));
  return out;
}

/// Parses one container from the front of `bytes`. Trailing bytes (block
/// padding) are ignored.
inline LayerContainer parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < container_fixed_header) throw Error(ErrorCode::parse, "container shorter than its fixed header");
  if (!std::equal(container_magic.begin(), container_magic.end(), bytes.begin()))
    throw Error(ErrorCode::parse, "container magic mismatch");
  LayerContainer c;
  c.layer_index = bytes[4];
  c.decompositions = bytes[5];
  c.channels = bytes[6];
  c.width = std::uint32_t(detail::get_le(bytes, 7, 4));
  c.height = std::uint32_t(detail::get_le(bytes, 11, 4));
  if (c.channels != 1 && c.channels != 3) throw Error(ErrorCode::parse, "container channel count must be 1 or 3");
  if (c.decompositions < 1 || c.decompositions > 30) throw Error(ErrorCode::parse, "container decomposition count out of range");
  if (c.layer_index > c.decompositions) throw Error(ErrorCode::parse, "container layer index exceeds decomposition count");
  if (std::min(c.width, c.height) < (std::uint64_t(1) << c.decompositions))
    throw Error(ErrorCode::parse, "container dimensions too small for its decomposition count");

  const std::size_t n_records = c.expected_records();
  std::size_t off = container_fixed_header;
  if (bytes.size() < off + n_records * container_record_size)
    throw Error(ErrorCode::parse, "container truncated inside subband records");
  for (std::size_t i = 0; i < n_records; ++i) {
    SubbandRecord r;
    r.delta = std::uint16_t(detail::get_le(bytes, off, 2));
    const std::uint8_t k = bytes[off + 2];
    r.bit_length = std::uint32_t(detail::get_le(bytes, off + 3, 4));
    if (r.delta == 0) throw Error(ErrorCode::parse, "subband quantization step is zero");
    if (k > rice::max_parameter) throw Error(ErrorCode::parse, "rice parameter field uses reserved bits");
    r.rice_k = k;
    c.records.push_back(r);
    off += container_record_size;
  }
  const std::size_t payload_bytes = (c.payload_bits() + 7) / 8;
  if (bytes.size() < off + payload_bytes) throw Error(ErrorCode::parse, "container payload truncated");
  c.payload.assign(bytes.begin() + std::ptrdiff_t(off), bytes.begin() + std::ptrdiff_t(off + payload_bytes));
  return c;
}

// ---------------------------------------------------------------------------
// Quantization

inline std::int32_t quantize(std::int32_t v, std::int32_t delta) {
  if (delta == 1) return v;
  return v >= 0 ? v / delta : -((-v) / delta);
}

/// s != 0 -> sign(s) * (|s| + 0.5) * delta, rounded; delta == 1 is identity.
inline std::int32_t dequantize(std::int32_t s, std::int32_t delta) {
  if (delta == 1 || s == 0) return s * delta;
  const double mag = (std::abs(double(s)) + 0.5) * double(delta);
  const auto r = std::int32_t(std::lround(mag));
  return s > 0 ? r : -r;
}

// ---------------------------------------------------------------------------
// Encode / decode

namespace detail {

inline void append_subband(const Band& band, std::int32_t delta, BitWriter& bits, LayerContainer& c) {
  std::vector<std::int32_t> q(band.data.size());
  std::transform(band.data.begin(), band.data.end(), q.begin(), [&](std::int32_t v) { return quantize(v, delta); });
  if (std::all_of(q.begin(), q.end(), [](std::int32_t v) { return v == 0; })) {
    c.records.push_back({std::uint16_t(delta), 0, 0});
    return;
  }
  const unsigned k = rice::best_parameter(q);
  const std::size_t before = bits.bit_count();
  rice::encode(q, k, bits);
  c.records.push_back({std::uint16_t(delta), std::uint8_t(k), std::uint32_t(bits.bit_count() - before)});
}

}  // namespace detail

/// Encodes `img` into numLevels self-contained resolution layers
/// (numLevels - 1 decompositions). Layer 0 is the thumbnail.
inline LayeredStream encode_layers(const Image& img, int num_levels, int q) {
  if (num_levels < 2) throw Error(ErrorCode::contract, "numLevels must be >= 2");
  if (q < 1 || q > 65535) throw Error(ErrorCode::contract, "quantization step must be in [1, 65535]");
  const int d_levels = num_levels - 1;
  const SubbandPyramid pyr = dwt_forward(img, d_levels);

  LayeredStream stream;
  for (int k = 0; k <= d_levels; ++k) {
    LayerContainer c;
    c.layer_index = std::uint8_t(k);
    c.decompositions = std::uint8_t(d_levels);
    c.channels = std::uint8_t(img.channels);
    c.width = std::uint32_t(img.width);
    c.height = std::uint32_t(img.height);
    BitWriter bits;
    for (const auto& plane : pyr.planes) {
      if (k == 0) {
        detail::append_subband(plane.ll, 1, bits, c);
      } else {
        const auto& d = plane.details[std::size_t(d_levels - k)];
        detail::append_subband(d.hl, q, bits, c);
        detail::append_subband(d.lh, q, bits, c);
        detail::append_subband(d.hh, q, bits, c);
      }
    }
    c.payload = bits.bytes();
    stream.layers.push_back(std::move(c));
  }
  return stream;
}

/// Output size of a level-K reconstruction.
inline std::pair<std::size_t, std::size_t> decoded_size(std::size_t width, std::size_t height, int d_levels, int k) {
  return {size_at_level(width, d_levels - k), size_at_level(height, d_levels - k)};
}

/// Reconstructs the image at scale 1 / 2^(D-K) from layers 0..K.
inline Image decode_layers(std::span<const LayerContainer> layers, int k_target) {
  if (layers.empty()) throw Error(ErrorCode::incomplete_layer, "missing layer 0", 0);
  const LayerContainer* by_index[256] = {};
  for (const auto& c : layers) by_index[c.layer_index] = &c;
  const LayerContainer* first = nullptr;
  for (int j = 0; j <= std::max(k_target, 0); ++j) {
    if (by_index[j] == nullptr) throw Error(ErrorCode::incomplete_layer, "missing layer " + std::to_string(j), j);
    if (!first) first = by_index[j];
  }
  const int d_levels = first->decompositions;
  if (k_target < 0 || k_target > d_levels) throw Error(ErrorCode::contract, "target level outside [0, D]");
  for (int j = 0; j <= k_target; ++j) {
    const auto& c = *by_index[j];
    if (c.decompositions != first->decompositions || c.channels != first->channels || c.width != first->width ||
        c.height != first->height)
      throw Error(ErrorCode::structure, "layer " + std::to_string(j) + " disagrees with layer 0 geometry", j);
    if (c.records.size() != c.expected_records()) throw Error(ErrorCode::structure, "layer record count mismatch", j);
  }

  auto decode_band = [](const LayerContainer& c, std::size_t record, std::size_t& bit_offset) {
    const auto [w, h] = detail::record_band_shape(c, record);
    const auto& r = c.records[record];
    BitReader reader(c.payload, bit_offset, r.bit_length);
    Band band(w, h);
    if (r.bit_length == 0) return band;
    const auto q = rice::decode(reader, w * h, r.rice_k);
    if (reader.remaining() != 0) throw Error(ErrorCode::parse, "subband bit length disagrees with its content", c.layer_index);
    std::transform(q.begin(), q.end(), band.data.begin(), [&](std::int32_t s) { return dequantize(s, r.delta); });
    bit_offset += r.bit_length;
    return band;
  };

  std::vector<PlanePyramid> planes(first->channels);
  for (auto& p : planes) p.details.resize(std::size_t(d_levels));
  for (int j = 0; j <= k_target; ++j) {
    const auto& c = *by_index[j];
    std::size_t bit_offset = 0;
    for (std::size_t ch = 0; ch < c.channels; ++ch) {
      if (j == 0) {
        planes[ch].ll = decode_band(c, ch, bit_offset);
      } else {
        auto& d = planes[ch].details[std::size_t(d_levels - j)];
        d.hl = decode_band(c, ch * 3, bit_offset);
        d.lh = decode_band(c, ch * 3 + 1, bit_offset);
        d.hh = decode_band(c, ch * 3 + 2, bit_offset);
      }
    }
  }

  std::vector<Band> out;
  for (const auto& p : planes) out.push_back(dwt_inverse_plane(p, first->width, first->height, d_levels - k_target));
  return band_planes_to_image(out);
}

inline Image decode_layers(const LayeredStream& stream, int k_target) {
  return decode_layers(std::span<const LayerContainer>(stream.layers), k_target);
}

}  // namespace picdna
