#pragma once

// Deterministic photographic-style test scenes. Stand-ins for the Kodak set,
// which is not redistributable in-tree; set PICDNA_KODAK_DIR to a directory of
// kodimNN.ppm files to run the image-level tests on the real images instead.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "picdna/image.hpp"

namespace picdna::fixtures {

inline Image synthetic_scene(std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  struct Blob { double cx, cy, r, amp[3]; };
  struct Rect { double x0, y0, x1, y1, v[3]; };
  std::vector<Blob> blobs(8);
  for (auto& b : blobs) {
    b.cx = u(rng) * double(width);
    b.cy = u(rng) * double(height);
    b.r = (0.05 + 0.2 * u(rng)) * double(std::min(width, height));
    for (auto& a : b.amp) a = (u(rng) - 0.5) * 160.0;
  }
  std::vector<Rect> rects(5);
  for (auto& r : rects) {
    r.x0 = u(rng) * double(width) * 0.8;
    r.y0 = u(rng) * double(height) * 0.8;
    r.x1 = r.x0 + (0.05 + 0.3 * u(rng)) * double(width);
    r.y1 = r.y0 + (0.05 + 0.3 * u(rng)) * double(height);
    for (auto& v : r.v) v = 30.0 + 200.0 * u(rng);
  }
  double sky[3], ground[3];
  for (int c = 0; c < 3; ++c) {
    sky[c] = 90.0 + 140.0 * u(rng);
    ground[c] = 30.0 + 120.0 * u(rng);
  }
  const double horizon = (0.3 + 0.4 * u(rng)) * double(height);
  const double freq = 0.05 + 0.25 * u(rng);
  const double tex_x0 = u(rng) * double(width) * 0.5;
  std::normal_distribution<double> noise(0.0, 2.0);

  Image img(width, height, channels);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = double(x), fy = double(y);
      const double n = noise(rng);
      for (std::size_t c = 0; c < channels; ++c) {
        double v = fy < horizon ? sky[c] - 40.0 * fy / horizon
                                : ground[c] + 25.0 * std::sin(fx * 0.01 + fy * 0.02 + double(c));
        for (const auto& b : blobs) {
          const double d2 = ((fx - b.cx) * (fx - b.cx) + (fy - b.cy) * (fy - b.cy)) / (b.r * b.r);
          v += b.amp[c] * std::exp(-d2);
        }
        for (const auto& r : rects)
          if (fx >= r.x0 && fx < r.x1 && fy >= r.y0 && fy < r.y1) v = 0.5 * v + 0.5 * r.v[c];
        if (fx > tex_x0 && fx < tex_x0 + double(width) * 0.25 && fy > horizon)
          v += 18.0 * std::sin(fx * freq) * std::cos(fy * freq * 1.3);
        v += n;
        img.at(c, y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

/// Test corpus: real Kodak images when PICDNA_KODAK_DIR is set, otherwise
/// 768x512 RGB synthetic scenes.
inline std::vector<Image> kodak_like_corpus(std::size_t count) {
  std::vector<Image> out;
  if (const char* dir = std::getenv("PICDNA_KODAK_DIR")) {
    for (std::size_t i = 1; i <= 24 && out.size() < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "kodim%02zu.ppm", i);
      const auto path = std::filesystem::path(dir) / name;
      if (std::filesystem::exists(path)) out.push_back(read_pnm(path));
    }
    if (!out.empty()) return out;
  }
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_scene(768, 512, 3, 1000 + i));
  return out;
}

inline Image noise_image(std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(width, height, channels);
  for (auto& s : img.samples) s = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

}  // namespace picdna::fixtures
