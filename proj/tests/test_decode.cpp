#include <gtest/gtest.h>

#include "picdna/decode.hpp"
#include "support/expect.hpp"
#include "support/pools.hpp"

using namespace picdna;
using fixtures::expect_error;

namespace {

const OligoPool& pool2() {
  static const auto p = fixtures::small_pool(2, 96, 64, 3, 4, 1, {32, 8});
  return p;
}

DecodeParams clean() {
  DecodeParams p;
  p.coverage = 1;
  p.rates = ErrorRates::zero();
  p.mode = SequencingMode::exact;
  return p;
}

}  // namespace

TEST(Decode, NoiseFreeEveryLevelMatchesReference) {
  const auto& pool = pool2();
  for (std::size_t id = 0; id < 2; ++id)
    for (int k = 0; k < 4; ++k) EXPECT_EQ(decode_image(pool, id, k, clean()).image, reference_decode(pool, id, k)) << id << ' ' << k;
}

TEST(Decode, FullLevelIsLossless) {
  const auto& pool = pool2();
  const auto original = fixtures::synthetic_scene(96, 64, 3, 501);
  const auto out = decode_image(pool, 1, 3, clean());
  EXPECT_EQ(out.image, original);
  EXPECT_EQ(decode_image(pool, pool.registry.image_pairs[1], 3, clean()).image, original);
}

TEST(Decode, CostCountsOnlySequencedLayers) {
  const auto& pool = pool2();
  const auto out = decode_image(pool, 0, 2, clean());
  ASSERT_EQ(out.cost.layers.size(), 3u);
  std::size_t nt = 0;
  for (const auto& l : out.cost.layers) {
    EXPECT_EQ(l.oligos, pool.entry(0, l.layer)->oligos);
    EXPECT_EQ(l.reads, l.oligos);
    EXPECT_EQ(l.nucleotides, l.oligos * oligo_length);
    nt += l.nucleotides;
  }
  EXPECT_EQ(out.cost.cumulative_nucleotides, nt);
  EXPECT_DOUBLE_EQ(out.cost.read_cost(), double(nt) / (96.0 * 64.0));
  EXPECT_GE(out.cost.gains.gpd, 1.0);
  EXPECT_GE(out.cost.gains.gra, out.cost.gains.gpd);
}

TEST(Decode, IterativeDecodeReusesLayers) {
  const auto& pool = pool2();
  ProgressiveDecoder dec(pool, 0, clean());
  const auto first = dec.advance(1);
  ASSERT_EQ(first.size(), 2u);
  const auto second = dec.advance(3);
  ASSERT_EQ(second.size(), 2u);
  EXPECT_EQ(second[0].layer, 2u);
  EXPECT_EQ(second[1].layer, 3u);
  const auto direct = decode_image(pool, 0, 3, clean());
  EXPECT_EQ(dec.cost().cumulative_nucleotides, direct.cost.cumulative_nucleotides);
  EXPECT_EQ(dec.image(), direct.image);
  EXPECT_EQ(dec.image_at(1), decode_image(pool, 0, 1, clean()).image);
  EXPECT_TRUE(dec.advance(2).empty());
}

TEST(Decode, IterativeReuseHoldsUnderNoise) {
  const auto& pool = pool2();
  DecodeParams p;
  p.coverage = 8;
  p.seed = 77;
  ProgressiveDecoder dec(pool, 1, p);
  dec.advance(1);
  dec.advance(3);
  const auto direct = decode_image(pool, 1, 3, p);
  EXPECT_EQ(to_json(dec.cost()), to_json(direct.cost));
  EXPECT_EQ(dec.image(), direct.image);
}

TEST(Decode, DeterministicForSeed) {
  const auto& pool = pool2();
  DecodeParams p;
  p.coverage = 6;
  p.seed = 5;
  const auto a = decode_image(pool, 0, 3, p);
  const auto b = decode_image(pool, 0, 3, p);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(to_json(a.cost).dump(), to_json(b.cost).dump());
  EXPECT_EQ(trace_json(a.trace).dump(), trace_json(b.trace).dump());
}

TEST(Decode, FailureNamesTheLayer) {
  const auto& pool = pool2();
  auto p = clean();
  p.layer_coverage = {1, 1, 0, 1};
  expect_error(ErrorCode::gap, [&] { decode_image(pool, 0, 3, p); }, 2);
  ProgressiveDecoder dec(pool, 0, p);
  EXPECT_THROW(dec.advance(3), Error);
  EXPECT_EQ(dec.decoded_level(), 1);
  EXPECT_EQ(dec.trace().size(), 3u);
  EXPECT_EQ(dec.trace().back().blocks_recovered, 0u);
}

TEST(Decode, ContractErrors) {
  const auto& pool = pool2();
  expect_error(ErrorCode::contract, [&] { decode_image(pool, 9, 1, clean()); }, 9);
  expect_error(ErrorCode::contract, [&] { decode_image(pool, 0, 4, clean()); });
  expect_error(ErrorCode::unidentified_primer, [&] { decode_image(pool, PrimerPair{}, 1, clean()); });
  ProgressiveDecoder dec(pool, 0, clean());
  expect_error(ErrorCode::incomplete_layer, [&] { (void)dec.image(); });
}

TEST(Sweep, CleanAndEmptyCoverage) {
  const auto& pool = pool2();
  const auto rows = coverage_sweep(pool, 0, 3, ErrorRates{}, {0.0, 10.0}, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].successes, 0u);
  EXPECT_EQ(rows[1].trials, 3u);
  EXPECT_DOUBLE_EQ(rows[1].success_rate(), 1.0);
  EXPECT_THROW(coverage_sweep(pool, 0, 3, ErrorRates{}, {}, 3), Error);
}

TEST(CostInputs, TargetMovesToFirstRow) {
  const auto& pool = pool2();
  const auto in = cost_inputs_from_pool(pool, 1, {2.0});
  EXPECT_EQ(in.n_images, 2u);
  EXPECT_EQ(in.coverage, std::vector<double>(4, 2.0));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(in.oligo_count[0][k], double(pool.entry(1, k)->oligos));
}
