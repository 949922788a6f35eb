#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "picdna/error.hpp"
#include "picdna/image.hpp"

namespace picdna {

/// Dense 2-D array of signed coefficients, row-major.
struct Band {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::int32_t> data;

  Band() = default;
  Band(std::size_t w, std::size_t h) : width(w), height(h), data(w * h, 0) {}

  std::int32_t& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  std::int32_t at(std::size_t y, std::size_t x) const { return data[y * width + x]; }

  friend bool operator==(const Band&, const Band&) = default;
};

/// Detail subbands of one decomposition level. HL is horizontally
/// high-passed and vertically low-passed; LH the converse.
struct DetailLevel {
  Band hl;
  Band lh;
  Band hh;
  friend bool operator==(const DetailLevel&, const DetailLevel&) = default;
};

struct PlanePyramid {
  Band ll;
  // details[d - 1] holds level d; level 1 is the finest.
  std::vector<DetailLevel> details;
  friend bool operator==(const PlanePyramid&, const PlanePyramid&) = default;
};

struct SubbandPyramid {
  int decompositions = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<PlanePyramid> planes;  // one per image channel
  friend bool operator==(const SubbandPyramid&, const SubbandPyramid&) = default;
};

constexpr std::size_t low_size(std::size_t n) { return (n + 1) / 2; }
constexpr std::size_t high_size(std::size_t n) { return n / 2; }

/// Size of a dimension after `levels` low-pass halvings.
constexpr std::size_t size_at_level(std::size_t n, int levels) {
  for (int i = 0; i < levels; ++i) n = low_size(n);
  return n;
}

namespace lifting {

// Floor division that rounds toward negative infinity for negative numerators.
constexpr std::int32_t floor_div(std::int32_t a, std::int32_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

/// One level of reversible LeGall 5/3 lifting with whole-sample symmetric
/// extension (x[-1] = x[1], x[n] = x[n-2]). Low band gets ceil(n/2) samples.
inline void forward_1d(std::span<const std::int32_t> x, std::span<std::int32_t> low,
                       std::span<std::int32_t> high) {
  const std::size_t n = x.size();
  const std::size_t nh = high_size(n);
  const std::size_t nl = low_size(n);
  if (n == 1) {
    low[0] = x[0];
    return;
  }
  for (std::size_t i = 0; i < nh; ++i) {
    const std::int32_t left = x[2 * i];
    const std::int32_t right = (2 * i + 2 < n) ? x[2 * i + 2] : x[2 * i];
    high[i] = x[2 * i + 1] - floor_div(left + right, 2);
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const std::int32_t hl = i > 0 ? high[i - 1] : high[0];
    const std::int32_t hr = i < nh ? high[i] : high[nh - 1];
    low[i] = x[2 * i] + floor_div(hl + hr + 2, 4);
  }
}

inline void inverse_1d(std::span<const std::int32_t> low, std::span<const std::int32_t> high,
                       std::span<std::int32_t> x) {
  const std::size_t n = x.size();
  const std::size_t nh = high_size(n);
  const std::size_t nl = low_size(n);
  if (n == 1) {
    x[0] = low[0];
    return;
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const std::int32_t hl = i > 0 ? high[i - 1] : high[0];
    const std::int32_t hr = i < nh ? high[i] : high[nh - 1];
    x[2 * i] = low[i] - floor_div(hl + hr + 2, 4);
  }
  for (std::size_t i = 0; i < nh; ++i) {
    const std::int32_t left = x[2 * i];
    const std::int32_t right = (2 * i + 2 < n) ? x[2 * i + 2] : x[2 * i];
    x[2 * i + 1] = high[i] + floor_div(left + right, 2);
  }
}

}  // namespace lifting

namespace detail {

// Rows first, then columns.
inline DetailLevel split_level(const Band& in, Band& ll) {
  const std::size_t w = in.width, h = in.height;
  const std::size_t wl = low_size(w), wh = high_size(w);
  const std::size_t hl = low_size(h), hh = high_size(h);

  Band lo(wl, h), hi(wh, h);
  std::vector<std::int32_t> row_lo(wl), row_hi(wh);
  for (std::size_t y = 0; y < h; ++y) {
    lifting::forward_1d(std::span(in.data).subspan(y * w, w), row_lo, row_hi);
    std::copy(row_lo.begin(), row_lo.end(), lo.data.begin() + std::ptrdiff_t(y * wl));
    std::copy(row_hi.begin(), row_hi.end(), hi.data.begin() + std::ptrdiff_t(y * wh));
  }

  ll = Band(wl, hl);
  DetailLevel d{Band(wh, hl), Band(wl, hh), Band(wh, hh)};
  std::vector<std::int32_t> col(h), col_lo(hl), col_hi(hh);
  auto columns = [&](const Band& src, Band& low_dst, Band& high_dst) {
    for (std::size_t x = 0; x < src.width; ++x) {
      for (std::size_t y = 0; y < h; ++y) col[y] = src.at(y, x);
      lifting::forward_1d(col, col_lo, col_hi);
      for (std::size_t y = 0; y < hl; ++y) low_dst.at(y, x) = col_lo[y];
      for (std::size_t y = 0; y < hh; ++y) high_dst.at(y, x) = col_hi[y];
    }
  };
  columns(lo, ll, d.lh);
  columns(hi, d.hl, d.hh);
  return d;
}

inline Band merge_level(const Band& ll, const DetailLevel& d, std::size_t w, std::size_t h) {
  const std::size_t wl = low_size(w), wh = high_size(w);
  const std::size_t hl = low_size(h), hh = high_size(h);
  auto expect = [](const Band& b, std::size_t bw, std::size_t bh) {
    if (b.width != bw || b.height != bh || b.data.size() != bw * bh)
      throw Error(ErrorCode::structure, "subband shape inconsistent with pyramid dimensions");
  };
  expect(ll, wl, hl);
  expect(d.hl, wh, hl);
  expect(d.lh, wl, hh);
  expect(d.hh, wh, hh);

  Band lo(wl, h), hi(wh, h);
  std::vector<std::int32_t> col(h), col_lo(hl), col_hi(hh);
  auto columns = [&](const Band& low_src, const Band& high_src, Band& dst) {
    for (std::size_t x = 0; x < dst.width; ++x) {
      for (std::size_t y = 0; y < hl; ++y) col_lo[y] = low_src.at(y, x);
      for (std::size_t y = 0; y < hh; ++y) col_hi[y] = high_src.at(y, x);
      lifting::inverse_1d(col_lo, col_hi, col);
      for (std::size_t y = 0; y < h; ++y) dst.at(y, x) = col[y];
    }
  };
  columns(ll, d.lh, lo);
  columns(d.hl, d.hh, hi);

  Band out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    lifting::inverse_1d(std::span(lo.data).subspan(y * wl, wl), std::span(hi.data).subspan(y * wh, wh),
                        std::span(out.data).subspan(y * w, w));
  }
  return out;
}

}  // namespace detail

inline void check_decomposable(std::size_t width, std::size_t height, int levels) {
  if (levels < 1) throw Error(ErrorCode::dimension, "decomposition count must be >= 1");
  if (levels > 30 || std::min(width, height) < (std::size_t(1) << levels))
    throw Error(ErrorCode::dimension, "image too small for the requested decomposition count");
}

/// Forward decomposition of a single plane.
inline PlanePyramid dwt_forward_plane(Band plane, int levels) {
  check_decomposable(plane.width, plane.height, levels);
  PlanePyramid p;
  p.details.reserve(std::size_t(levels));
  Band current = std::move(plane);
  for (int d = 1; d <= levels; ++d) {
    Band ll;
    p.details.push_back(detail::split_level(current, ll));
    current = std::move(ll);
  }
  p.ll = std::move(current);
  return p;
}

/// Reconstructs the low band at level `stop_level` (0 = full resolution)
/// from the pyramid's LL and its coarser detail levels.
inline Band dwt_inverse_plane(const PlanePyramid& p, std::size_t width, std::size_t height, int stop_level = 0) {
  const int levels = int(p.details.size());
  if (stop_level < 0 || stop_level > levels) throw Error(ErrorCode::structure, "invalid reconstruction level");
  Band current = p.ll;
  for (int d = levels; d > stop_level; --d) {
    const std::size_t w = size_at_level(width, d - 1);
    const std::size_t h = size_at_level(height, d - 1);
    current = detail::merge_level(current, p.details[std::size_t(d - 1)], w, h);
  }
  return current;
}

inline SubbandPyramid dwt_forward(const Image& img, int levels) {
  img.validate();
  check_decomposable(img.width, img.height, levels);
  SubbandPyramid pyr;
  pyr.decompositions = levels;
  pyr.width = img.width;
  pyr.height = img.height;
  for (std::size_t c = 0; c < img.channels; ++c) {
    Band plane(img.width, img.height);
    const auto src = img.plane(c);
    std::copy(src.begin(), src.end(), plane.data.begin());
    pyr.planes.push_back(dwt_forward_plane(std::move(plane), levels));
  }
  return pyr;
}

inline std::uint8_t clamp_sample(std::int32_t v) {
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

inline Image band_planes_to_image(const std::vector<Band>& planes) {
  Image img(planes.front().width, planes.front().height, planes.size());
  for (std::size_t c = 0; c < planes.size(); ++c)
    for (std::size_t i = 0; i < planes[c].data.size(); ++i)
      img.samples[c * img.plane_size() + i] = clamp_sample(planes[c].data[i]);
  return img;
}

inline Image dwt_inverse(const SubbandPyramid& pyr) {
  if (pyr.planes.size() != 1 && pyr.planes.size() != 3)
    throw Error(ErrorCode::structure, "pyramid must have 1 or 3 planes");
  std::vector<Band> planes;
  for (const auto& p : pyr.planes) {
    if (int(p.details.size()) != pyr.decompositions)
      throw Error(ErrorCode::structure, "plane decomposition count mismatch");
    planes.push_back(dwt_inverse_plane(p, pyr.width, pyr.height));
  }
  return band_planes_to_image(planes);
}

}  // namespace picdna
