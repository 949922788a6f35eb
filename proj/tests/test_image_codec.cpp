#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "picdna/image.hpp"
#include "picdna/layered_codec.hpp"
#include "picdna/rice.hpp"
#include "picdna/wavelet.hpp"
#include "support/scenes.hpp"

using namespace picdna;

namespace {

// Independent 5/3 oracle: materialises the whole-sample symmetric extension
// explicitly instead of special-casing indices.
void oracle_lift(const std::vector<int>& x, std::vector<int>& low, std::vector<int>& high) {
  const int n = int(x.size());
  auto ext = [&](int i) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return x[std::size_t(i)];
  };
  high.assign(std::size_t(n / 2), 0);
  low.assign(std::size_t((n + 1) / 2), 0);
  auto fl = [](double v) { return int(std::floor(v)); };
  auto hext = [&](int i) {
    // Predict residual at odd position 2i+1, extended symmetrically.
    int pos = 2 * i + 1;
    while (pos < 0 || pos >= n) pos = pos < 0 ? -pos : 2 * (n - 1) - pos;
    const int j = (pos - 1) / 2;
    return ext(2 * j + 1) - fl((ext(2 * j) + ext(2 * j + 2)) / 2.0);
  };
  for (int i = 0; i < n / 2; ++i) high[std::size_t(i)] = hext(i);
  for (int i = 0; i < (n + 1) / 2; ++i) low[std::size_t(i)] = ext(2 * i) + fl((hext(i - 1) + hext(i) + 2) / 4.0);
}

}  // namespace

TEST(Lifting, HandComputedRow) {
  const std::vector<std::int32_t> row{10, 12, 14, 16};
  std::vector<std::int32_t> low(2), high(2);
  lifting::forward_1d(row, low, high);
  // Whole-sample extension mirrors x[4] onto x[2] = 14.
  EXPECT_EQ(high, (std::vector<std::int32_t>{0, 2}));
  EXPECT_EQ(low, (std::vector<std::int32_t>{10, 15}));
}

TEST(Lifting, MatchesOracleOnRandomSignals) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    std::vector<int> x(n);
    for (auto& v : x) v = int(rng() % 511) - 255;
    std::vector<int> lo_ref, hi_ref;
    oracle_lift(x, lo_ref, hi_ref);

    std::vector<std::int32_t> xs(x.begin(), x.end()), lo(low_size(n)), hi(high_size(n)), back(n);
    lifting::forward_1d(xs, lo, hi);
    ASSERT_EQ(std::vector<int>(lo.begin(), lo.end()), lo_ref) << "n=" << n;
    ASSERT_EQ(std::vector<int>(hi.begin(), hi.end()), hi_ref) << "n=" << n;
    lifting::inverse_1d(lo, hi, back);
    ASSERT_EQ(back, xs);
  }
}

TEST(Dwt, ConstantImageHasNoDetail) {
  Image img(8, 8, 1, 100);
  const auto pyr = dwt_forward(img, 2);
  for (auto v : pyr.planes[0].ll.data) EXPECT_EQ(v, 100);
  for (const auto& d : pyr.planes[0].details)
    for (const Band* b : {&d.hl, &d.lh, &d.hh})
      for (auto v : b->data) EXPECT_EQ(v, 0);
  EXPECT_EQ(dwt_inverse(pyr), img);
}

TEST(Dwt, ReversibleOnRandomImages) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = fixtures::noise_image(16, 16, 1, seed);
    for (int d = 1; d <= 4; ++d) ASSERT_EQ(dwt_inverse(dwt_forward(img, d)), img);
  }
  // Odd and non-square shapes, colour.
  for (auto [w, h] : {std::pair{17, 13}, {33, 8}, {9, 40}}) {
    const auto img = fixtures::noise_image(std::size_t(w), std::size_t(h), 3, std::uint64_t(w * h));
    ASSERT_EQ(dwt_inverse(dwt_forward(img, 3)), img);
  }
}

TEST(Dwt, SubbandShapesFollowCeilFloorSplit) {
  const auto pyr = dwt_forward(fixtures::noise_image(17, 13, 1, 3), 2);
  const auto& p = pyr.planes[0];
  EXPECT_EQ(p.details[0].hl.width, 8u);
  EXPECT_EQ(p.details[0].hl.height, 7u);
  EXPECT_EQ(p.details[0].lh.width, 9u);
  EXPECT_EQ(p.details[0].lh.height, 6u);
  EXPECT_EQ(p.ll.width, 5u);
  EXPECT_EQ(p.ll.height, 4u);
}

TEST(Dwt, RejectsImagesTooSmall) {
  Image img(8, 7, 1);
  EXPECT_NO_THROW(dwt_forward(img, 2));
  try {
    dwt_forward(img, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension);
  }
}

TEST(Dwt, InverseRejectsInconsistentShapes) {
  auto pyr = dwt_forward(fixtures::noise_image(16, 16, 1, 1), 2);
  pyr.planes[0].details[1].hh = Band(3, 3);
  try {
    dwt_inverse(pyr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::structure);
  }
}

TEST(Dwt, ZeroedDetailsBlur) {
  const auto img = fixtures::synthetic_scene(128, 96, 1, 11);
  auto pyr = dwt_forward(img, 3);
  for (auto& d : pyr.planes[0].details)
    for (Band* b : {&d.hl, &d.lh, &d.hh}) std::fill(b->data.begin(), b->data.end(), 0);
  const double blurred = psnr(dwt_inverse(pyr), img);
  EXPECT_TRUE(std::isfinite(blurred));
  EXPECT_LT(blurred, psnr(dwt_inverse(dwt_forward(img, 3)), img));
}

TEST(Rice, InterleaveIsBijective) {
  for (std::int32_t v = -5000; v <= 5000; ++v) ASSERT_EQ(rice::deinterleave(rice::interleave(v)), v);
  EXPECT_EQ(rice::interleave(0), 0u);
  EXPECT_EQ(rice::interleave(-1), 1u);
  EXPECT_EQ(rice::interleave(1), 2u);
  EXPECT_EQ(rice::interleave(-2), 3u);
}

TEST(Rice, BestParameterIsExhaustiveMinimum) {
  std::mt19937 rng(3);
  std::vector<std::int32_t> v(300);
  for (auto& x : v) x = int(rng() % 200) - 100;
  const unsigned k = rice::best_parameter(v);
  for (unsigned j = 0; j <= 15; ++j) EXPECT_LE(rice::encoded_bits(v, k), rice::encoded_bits(v, j));
  BitWriter w;
  rice::encode(v, k, w);
  EXPECT_EQ(w.bit_count(), rice::encoded_bits(v, k));
  BitReader r(w.bytes(), 0, w.bit_count());
  EXPECT_EQ(rice::decode(r, v.size(), k), v);
}

TEST(Quantization, DequantizeUsesMidpointReconstruction) {
  EXPECT_EQ(quantize(17, 4), 4);
  EXPECT_EQ(quantize(-17, 4), -4);
  EXPECT_EQ(dequantize(4, 4), 18);
  EXPECT_EQ(dequantize(-4, 4), -18);
  EXPECT_EQ(dequantize(0, 4), 0);
  EXPECT_EQ(dequantize(-7, 1), -7);
  EXPECT_EQ(dequantize(1, 3), 5);  // 1.5 * 3 = 4.5 rounds away from zero
}

TEST(LayeredCodec, LosslessAtUnitStep) {
  for (auto [w, h, c] : {std::tuple{64, 48, 1}, {37, 29, 3}, {16, 16, 1}}) {
    const auto img = fixtures::noise_image(std::size_t(w), std::size_t(h), std::size_t(c), 99);
    for (int levels = 2; levels <= 5; ++levels) {
      const auto stream = encode_layers(img, levels, 1);
      ASSERT_EQ(stream.num_levels(), std::size_t(levels));
      ASSERT_EQ(decode_layers(stream, levels - 1), img);
    }
  }
}

TEST(LayeredCodec, ContainerRoundTripsInIsolation) {
  const auto img = fixtures::synthetic_scene(96, 64, 3, 5);
  const auto stream = encode_layers(img, 4, 3);
  for (const auto& layer : stream.layers) {
    const auto bytes = serialize(layer);
    EXPECT_EQ(bytes.size(), layer.serialized_size());
    auto padded = bytes;
    padded.resize(bytes.size() + 29, 0);  // block padding must be harmless
    const auto parsed = parse_container(padded);
    EXPECT_EQ(parsed, layer);
    EXPECT_EQ(serialize(parsed), bytes);
  }
  // Header fields sit at fixed little-endian offsets.
  const auto bytes = serialize(stream.layers[2]);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PDL1");
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[5], 3);
  EXPECT_EQ(bytes[6], 3);
  EXPECT_EQ(bytes[7] | (bytes[8] << 8), 96);
  EXPECT_EQ(bytes[11] | (bytes[12] << 8), 64);
  EXPECT_EQ(bytes[15] | (bytes[16] << 8), 3);  // delta of the first detail band
}

TEST(LayeredCodec, ParseRejectsCorruptContainers) {
  const auto stream = encode_layers(fixtures::synthetic_scene(32, 32, 1, 2), 3, 1);
  auto bytes = serialize(stream.layers[1]);
  auto expect_parse_error = [](std::vector<std::uint8_t> b) {
    try {
      parse_container(b);
      FAIL() << "expected parse error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse);
    }
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_parse_error(bad_magic);
  expect_parse_error(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
  auto bad_k = bytes;
  bad_k[container_fixed_header + 2] = 0x1f;
  expect_parse_error(bad_k);
  auto bad_layer = bytes;
  bad_layer[4] = 9;
  expect_parse_error(bad_layer);
}

TEST(LayeredCodec, AllZeroImageCompressesHard) {
  Image img(256, 256, 3, 0);
  for (int q : {1, 4}) {
    const auto stream = encode_layers(img, 5, q);
    std::size_t total = 0;
    for (const auto& l : stream.layers) total += l.payload.size();
    EXPECT_LT(total, img.samples.size() / 20);
  }
}

TEST(LayeredCodec, ThumbnailGeometry) {
  const auto img = fixtures::synthetic_scene(768, 512, 1, 4);
  const auto stream = encode_layers(img, 5, 2);
  const auto thumb = decode_layers(stream, 0);
  EXPECT_EQ(thumb.width, 48u);
  EXPECT_EQ(thumb.height, 32u);
  const auto half = decode_layers(stream, 3);
  EXPECT_EQ(half.width, 384u);
  EXPECT_EQ(half.height, 256u);
  EXPECT_EQ(decoded_size(37, 29, 3, 0), (std::pair<std::size_t, std::size_t>{5, 4}));
}

TEST(LayeredCodec, MissingLayerIsNamed) {
  const auto stream = encode_layers(fixtures::synthetic_scene(64, 64, 1, 4), 4, 1);
  std::vector<LayerContainer> partial{stream.layers[0], stream.layers[1], stream.layers[3]};
  EXPECT_NO_THROW(decode_layers(partial, 1));
  try {
    decode_layers(partial, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incomplete_layer);
    EXPECT_EQ(e.detail(), 2);
  }
}

TEST(LayeredCodec, PsnrNondecreasingAcrossLevels) {
  const auto corpus = fixtures::kodak_like_corpus(2);
  for (const auto& img : corpus) {
    for (int q : {1, 2, 4, 8}) {
      const auto stream = encode_layers(img, 5, q);
      double prev = -1.0;
      for (int k = 0; k <= 4; ++k) {
        const auto rec = upsample_bicubic(decode_layers(stream, k), img.width, img.height);
        const double p = psnr(rec, img);
        EXPECT_GE(p, prev) << "q=" << q << " k=" << k;
        prev = p;
      }
    }
  }
}

TEST(LayeredCodec, ThumbnailIsSmallFractionOfStream) {
  for (const auto& img : fixtures::kodak_like_corpus(3)) {
    const auto stream = encode_layers(img, 5, 1);
    std::size_t total = 0;
    for (const auto& l : stream.layers) total += l.serialized_size();
    EXPECT_LT(double(stream.layers[0].serialized_size()), 0.05 * double(total));
  }
}

TEST(Psnr, ClosedForms) {
  Image a(8, 8, 1, 0), b(8, 8, 1, 128);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(255.0 * 255.0 / 16384.0), 1e-12);
  EXPECT_NEAR(psnr(a, b), 5.99, 0.005);
  EXPECT_THROW(psnr(a, Image(8, 4, 1)), Error);
}

TEST(Bicubic, IdentityAtSameSize) {
  const auto img = fixtures::noise_image(13, 7, 3, 8);
  EXPECT_EQ(upsample_bicubic(img, 13, 7), img);
  EXPECT_THROW(upsample_bicubic(img, 12, 7), Error);
}

TEST(Bicubic, CheckerboardMatchesDirectKernelSum) {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 0, 1) = 255;
  img.at(0, 1, 0) = 255;
  img.at(0, 1, 1) = 0;
  const auto up = upsample_bicubic(img, 4, 4);

  // Direct 2-D evaluation of the Catmull-Rom kernel.
  auto w = [](double t) {
    t = std::abs(t);
    if (t <= 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
    if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
    return 0.0;
  };
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double sx = (x + 0.5) / 2 - 0.5, sy = (y + 0.5) / 2 - 0.5;
      double acc = 0;
      for (int j = int(std::floor(sy)) - 1; j <= int(std::floor(sy)) + 2; ++j)
        for (int i = int(std::floor(sx)) - 1; i <= int(std::floor(sx)) + 2; ++i)
          acc += w(sx - i) * w(sy - j) * img.at(0, std::size_t(std::clamp(j, 0, 1)), std::size_t(std::clamp(i, 0, 1)));
      const long expected = std::clamp(std::lround(acc), 0L, 255L);
      EXPECT_EQ(up.at(0, std::size_t(y), std::size_t(x)), expected) << x << "," << y;
    }
  }
  // Corner pixels overshoot past the source range and are clipped.
  EXPECT_EQ(up.at(0, 0, 0), 0);
  EXPECT_EQ(up.at(0, 0, 3), 255);
}

TEST(Bicubic, ThumbnailToFullSize) {
  const auto thumb = fixtures::noise_image(48, 32, 3, 2);
  const auto up = upsample_bicubic(thumb, 768, 512);
  EXPECT_EQ(up.width, 768u);
  EXPECT_EQ(up.height, 512u);
}

TEST(Pnm, RoundTripsGrayAndColour) {
  for (std::size_t c : {1u, 3u}) {
    const auto img = fixtures::noise_image(11, 5, c, c);
    std::stringstream ss;
    encode_pnm(img, ss);
    EXPECT_EQ(decode_pnm(ss), img);
  }
  std::stringstream bad("P3\n1 1\n255\n0 0 0");
  EXPECT_THROW(decode_pnm(bad), Error);
}

TEST(Bmp, HeaderAndRowPadding) {
  const auto img = fixtures::noise_image(3, 2, 1, 1);
  const auto bmp = encode_bmp(img);
  EXPECT_EQ(bmp.substr(0, 2), "BM");
  EXPECT_EQ(bmp.size(), 54u + 2u * 12u);
  // Bottom-up: first stored row is the last image row.
  EXPECT_EQ(std::uint8_t(bmp[54]), img.at(0, 1, 0));
}
