#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "picdna/error.hpp"

namespace picdna {

/// 8-bit raster, 1 or 3 channels, stored channel-planar and row-major:
/// sample (c, y, x) lives at `c * width * height + y * width + x`.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> samples;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), samples(w * h * c, fill) {
    validate();
  }

  std::size_t plane_size() const { return width * height; }
  std::size_t pixels() const { return width * height; }

  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return samples[c * plane_size() + y * width + x];
  }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return samples[c * plane_size() + y * width + x];
  }

  std::span<const std::uint8_t> plane(std::size_t c) const {
    return std::span<const std::uint8_t>(samples).subspan(c * plane_size(), plane_size());
  }

  void validate() const {
    if (width == 0 || height == 0) throw Error(ErrorCode::dimension, "image has a zero dimension");
    if (channels != 1 && channels != 3)
      throw Error(ErrorCode::dimension, "image must have 1 or 3 channels");
    if (samples.size() != width * height * channels)
      throw Error(ErrorCode::dimension, "sample count does not match width*height*channels");
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// ---------------------------------------------------------------------------
// PSNR

/// Peak signal-to-noise ratio in dB over all samples; +infinity when equal.
inline double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw Error(ErrorCode::dimension, "psnr: image dimensions differ");
  if (a.samples.empty()) throw Error(ErrorCode::dimension, "psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = double(a.samples[i]) - double(b.samples[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / double(a.samples.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// ---------------------------------------------------------------------------
// Bicubic resize

namespace detail {

inline double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::ptrdiff_t, 4> index{};
  std::array<double, 4> weight{};
};

// Pixel-centre mapping: destination pixel x samples source coordinate
// (x + 0.5) * src / dst - 0.5, taps clamped to the source edge.
inline std::vector<Taps> bicubic_taps(std::size_t src, std::size_t dst) {
  std::vector<Taps> taps(dst);
  const double scale = double(src) / double(dst);
  for (std::size_t x = 0; x < dst; ++x) {
    const double pos = (double(x) + 0.5) * scale - 0.5;
    const double base = std::floor(pos);
    const double frac = pos - base;
    for (int j = 0; j < 4; ++j) {
      const auto idx = static_cast<std::ptrdiff_t>(base) - 1 + j;
      taps[x].index[j] = std::clamp<std::ptrdiff_t>(idx, 0, std::ptrdiff_t(src) - 1);
      taps[x].weight[j] = catmull_rom(frac - double(j - 1));
    }
  }
  return taps;
}

}  // namespace detail

/// Catmull-Rom (a = -0.5) bicubic upsampling, edge-clamped, clipped to [0,255].
inline Image upsample_bicubic(const Image& img, std::size_t target_w, std::size_t target_h) {
  img.validate();
  if (target_w < img.width || target_h < img.height)
    throw Error(ErrorCode::dimension, "upsample_bicubic: target smaller than source");
  if (target_w == img.width && target_h == img.height) return img;

  const auto tx = detail::bicubic_taps(img.width, target_w);
  const auto ty = detail::bicubic_taps(img.height, target_h);
  Image out(target_w, target_h, img.channels);
  std::vector<double> rows(img.height * target_w);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < target_w; ++x) {
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) acc += tx[x].weight[j] * img.at(c, y, std::size_t(tx[x].index[j]));
        rows[y * target_w + x] = acc;
      }
    }
    for (std::size_t y = 0; y < target_h; ++y) {
      for (std::size_t x = 0; x < target_w; ++x) {
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) acc += ty[y].weight[j] * rows[std::size_t(ty[y].index[j]) * target_w + x];
        out.at(c, y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNM (P5 / P6, maxval 255)

namespace detail {

inline std::string next_pnm_token(std::istream& in) {
  std::string token;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(char(ch));
  }
  return token;
}

}  // namespace detail

inline Image decode_pnm(std::istream& in) {
  const std::string magic = detail::next_pnm_token(in);
  std::size_t channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else throw Error(ErrorCode::parse, "pnm: unsupported magic '" + magic + "'");

  auto number = [&](const char* what) {
    const std::string tok = detail::next_pnm_token(in);
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return std::size_t(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, std::string("pnm: bad ") + what + " '" + tok + "'");
    }
  };
  const std::size_t w = number("width");
  const std::size_t h = number("height");
  const std::size_t maxval = number("maxval");
  if (maxval != 255) throw Error(ErrorCode::parse, "pnm: only maxval 255 is supported");
  if (w == 0 || h == 0) throw Error(ErrorCode::dimension, "pnm: zero dimension");

  std::vector<std::uint8_t> interleaved(w * h * channels);
  in.read(reinterpret_cast<char*>(interleaved.data()), std::streamsize(interleaved.size()));
  if (std::size_t(in.gcount()) != interleaved.size())
    throw Error(ErrorCode::parse, "pnm: truncated sample data");

  Image img(w, h, channels);
  for (std::size_t p = 0; p < w * h; ++p)
    for (std::size_t c = 0; c < channels; ++c) img.samples[c * w * h + p] = interleaved[p * channels + c];
  return img;
}

inline void encode_pnm(const Image& img, std::ostream& out) {
  img.validate();
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  const std::size_t n = img.pixels();
  std::vector<std::uint8_t> interleaved(n * img.channels);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t c = 0; c < img.channels; ++c) interleaved[p * img.channels + c] = img.samples[c * n + p];
  out.write(reinterpret_cast<const char*>(interleaved.data()), std::streamsize(interleaved.size()));
}

inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return decode_pnm(in);
}

inline void write_pnm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  encode_pnm(img, out);
}

// ---------------------------------------------------------------------------
// BMP (24-bit, uncompressed, bottom-up). Grayscale is replicated to RGB.

inline std::string encode_bmp(const Image& img) {
  img.validate();
  const std::size_t row_bytes = (img.width * 3 + 3) & ~std::size_t(3);
  const std::size_t data_size = row_bytes * img.height;
  const std::uint32_t file_size = std::uint32_t(54 + data_size);
  std::string out(54 + data_size, '\0');

  auto put16 = [&](std::size_t off, std::uint16_t v) {
    out[off] = char(v & 0xff);
    out[off + 1] = char(v >> 8);
  };
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[off + i] = char((v >> (8 * i)) & 0xff);
  };
  out[0] = 'B';
  out[1] = 'M';
  put32(2, file_size);
  put32(10, 54);
  put32(14, 40);
  put32(18, std::uint32_t(img.width));
  put32(22, std::uint32_t(img.height));
  put16(26, 1);
  put16(28, 24);
  put32(34, std::uint32_t(data_size));
  put32(38, 2835);
  put32(42, 2835);

  for (std::size_t y = 0; y < img.height; ++y) {
    const std::size_t src_y = img.height - 1 - y;
    char* row = out.data() + 54 + y * row_bytes;
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::uint8_t r = img.at(0, src_y, x);
      const std::uint8_t g = img.channels == 3 ? img.at(1, src_y, x) : r;
      const std::uint8_t b = img.channels == 3 ? img.at(2, src_y, x) : r;
      row[3 * x] = char(b);
      row[3 * x + 1] = char(g);
      row[3 * x + 2] = char(r);
    }
  }
  return out;
}

}  // namespace picdna
