#include <gtest/gtest.h>

#include <random>

#include "picdna/reconstruct.hpp"
#include "picdna/pool.hpp"
#include "support/pools.hpp"

using namespace picdna;

namespace {

// The reconstruction entry points accept reads, never the pool or its oligos.
template <class T>
concept reconstructs_from = requires(const T& t, const PrimerRegistry& g) { reconstruct_reads(t, g); };
template <class T>
concept thumbnails_from = requires(const T& t, const PrimerRegistry& g) { extract_thumbnails(t, g); };
static_assert(reconstructs_from<ReadSet>);
static_assert(!reconstructs_from<OligoPool>);
static_assert(!reconstructs_from<std::vector<Oligo>>);
static_assert(thumbnails_from<ReadSet>);
static_assert(!thumbnails_from<OligoPool>);
static_assert(!thumbnails_from<std::vector<Oligo>>);

const OligoPool& pool3() {
  static const auto p = fixtures::small_pool(3, 64, 48, 1, 3, 1, {32, 8});
  return p;
}

std::string inner_of(const Oligo& o) { return o.sequence.substr(block_offset, block_nucleotides); }

char flip(char c) { return c == 'A' ? 'C' : 'A'; }

}  // namespace

TEST(Trim, NoiseFreeReadYieldsBlockAndLayer) {
  const auto& pool = pool3();
  const PrimerIndex index(pool.registry);
  for (const auto& o : pool.oligos) {
    const auto t = trim_and_identify(o.sequence, index, 3);
    ASSERT_TRUE(t.read) << to_string(t.reason);
    EXPECT_EQ(t.read->layer_id, o.provenance.layer);
    EXPECT_EQ(t.read->inner, inner_of(o));
    EXPECT_EQ(t.read->left_window, pool.registry.image_pairs[o.provenance.image].left.sequence);
  }
}

TEST(Trim, ToleratesOnePrimerSubstitution) {
  const auto& o = pool3().oligos[5];
  auto read = o.sequence;
  read[3] = flip(read[3]);
  read[block_offset - 4] = flip(read[block_offset - 4]);
  const auto t = trim_and_identify(read, pool3().registry, 3);
  ASSERT_TRUE(t.read);
  EXPECT_EQ(t.read->layer_id, o.provenance.layer);
  EXPECT_EQ(t.read->inner, inner_of(o));
  EXPECT_EQ(t.read->left_window.size(), primer_length);
}

TEST(Trim, RejectsRandomAndShortReads) {
  std::mt19937_64 rng(7);
  std::string junk(oligo_length, 'A');
  for (auto& c : junk) c = "ACGT"[rng() & 3];
  const auto t = trim_and_identify(junk, pool3().registry, 3);
  EXPECT_FALSE(t.read);
  EXPECT_EQ(t.reason, TrimReject::no_left_primer);
  EXPECT_EQ(trim_and_identify("ACGT", pool3().registry, 3).reason, TrimReject::too_short);
  EXPECT_THROW(trim_and_identify(junk, pool3().registry, -1), Error);
}

TEST(Cluster, ExactCoverageGivesFullClusters) {
  const auto& pool = pool3();
  const auto reads = sequence(pool.oligos, 3, ErrorRates::zero(), 11, SequencingMode::exact);
  std::vector<TrimmedRead> trimmed;
  for (const auto& r : reads.reads) trimmed.push_back(*trim_and_identify(r, pool.registry, 3).read);
  const auto c = cluster_reads(trimmed, pool.registry);
  EXPECT_EQ(c.keyed.size(), pool.oligos.size());
  EXPECT_TRUE(c.rescue.empty());
  EXPECT_EQ(c.unassigned, 0u);
  for (const auto& cl : c.keyed) {
    ASSERT_EQ(cl.members.size(), 3u);
    EXPECT_EQ(cl.members[0], cl.members[1]);
    EXPECT_EQ(cl.members[1], cl.members[2]);
  }
}

TEST(Cluster, PayloadErrorGoesToRescueAndImagesStaySeparate) {
  const auto& pool = pool3();
  std::vector<TrimmedRead> trimmed;
  for (const auto& o : pool.oligos) {
    auto t = *trim_and_identify(o.sequence, pool.registry, 3).read;
    if (&o == &pool.oligos[0]) t.inner[100] = flip(t.inner[100]);
    trimmed.push_back(std::move(t));
  }
  const auto c = cluster_reads(trimmed, pool.registry);
  ASSERT_EQ(c.rescue.size(), 1u);
  EXPECT_EQ(c.rescue[0].members.size(), 1u);
  EXPECT_EQ(c.rescue[0].key.image, pool.oligos[0].provenance.image);
  EXPECT_EQ(c.keyed.size(), pool.oligos.size() - 1);
  for (const auto& cl : c.keyed) {
    const auto prev = rotation_seed(pool.registry, cl.key.image);
    for (const auto& m : cl.members) EXPECT_EQ(decode_block_nucleotides(m, prev).index, *cl.key.index);
  }
}

TEST(Consensus, IdenticalMembers) {
  const auto& o = pool3().oligos[2];
  const auto prev = rotation_seed(pool3().registry, o.provenance.image);
  const std::vector<std::string> m(3, inner_of(o));
  const auto b = consensus_block(m, prev);
  ASSERT_TRUE(b);
  EXPECT_EQ(encode_block_nucleotides(*b, prev), inner_of(o));
}

TEST(Consensus, MajorityOutvotesSubstitution) {
  const auto& o = pool3().oligos[4];
  const auto prev = rotation_seed(pool3().registry, o.provenance.image);
  std::vector<std::string> m(5, inner_of(o));
  m[1][40] = flip(m[1][40]);
  m[3][150] = flip(m[3][150]);
  const auto b = consensus_block(m, prev);
  ASSERT_TRUE(b);
  EXPECT_EQ(encode_block_nucleotides(*b, prev), inner_of(o));
}

TEST(Consensus, TwoReadsWithDistinctDeletions) {
  const auto& o = pool3().oligos[7];
  const auto prev = rotation_seed(pool3().registry, o.provenance.image);
  const auto truth = inner_of(o);
  std::vector<std::string> m{truth, truth};
  m[0].erase(30, 1);
  m[1].erase(160, 1);
  // Position-wise voting cannot realign these; the alignment stages must.
  EXPECT_FALSE(try_decode_block(detail::plurality_vote(m), prev));
  const auto b = consensus_block(m, prev);
  ASSERT_TRUE(b);
  EXPECT_EQ(encode_block_nucleotides(*b, prev), truth);
}

TEST(Consensus, UnrecoverableClusterThrows) {
  const auto& pool = pool3();
  std::mt19937_64 rng(3);
  std::string junk(block_nucleotides, 'A');
  for (auto& c : junk) c = "ACGT"[rng() & 3];
  Cluster c{{0, 0, 5u}, {junk}};
  EXPECT_THROW(consensus(c, pool.registry), Error);
  EXPECT_THROW(consensus(Cluster{{0, 0, 5u}, {}}, pool.registry), Error);
}

TEST(Reconstruct, NoisyReadsRecoverEveryLayer) {
  const auto& pool = pool3();
  const auto reads = sequence(pool.oligos, 8, ErrorRates{}, 21);
  const auto rec = reconstruct_reads(reads, pool.registry);
  EXPECT_EQ(rec.reads, reads.reads.size());
  for (const auto& e : pool.manifest) {
    auto it = rec.layers.find({e.image, e.layer});
    ASSERT_NE(it, rec.layers.end());
    auto layer = it->second;
    const auto c = recover_layer_container(layer);
    EXPECT_EQ(c.layer_index, e.layer);
    // The stream is padded out to whole blocks.
    EXPECT_GE(layer.trace.bytes_recovered, e.layer_bytes);
    EXPECT_LT(layer.trace.bytes_recovered, e.layer_bytes + block_payload_bytes);
  }
}

TEST(Thumbnails, AllImagesFromThumbnailReads) {
  const auto& pool = pool3();
  const auto sel = pcr_select(pool, pool.registry.layer_pairs[0], 0);
  const auto reads = sequence(sel, 5, ErrorRates{}, 5);
  const auto ex = extract_thumbnails(reads, pool.registry);
  ASSERT_EQ(ex.thumbnails.size(), 3u);
  EXPECT_TRUE(ex.undecodable.empty());
  for (const auto& t : ex.thumbnails) {
    EXPECT_EQ(t.pair, pool.registry.image_pairs[t.image_id]);
    const auto info = pool.image_info(t.image_id);
    EXPECT_EQ(t.image.width, (info->width + 3) / 4);
  }
}

TEST(Thumbnails, MissingImageReportedUndecodable) {
  const auto& pool = pool3();
  std::vector<Oligo> sel;
  for (const auto& o : pcr_select(pool, pool.registry.layer_pairs[0], 0))
    if (o.provenance.image != 2) sel.push_back(o);
  const auto reads = sequence(sel, 5, ErrorRates{}, 5);
  const std::vector<std::size_t> expected{0, 1, 2};
  const auto ex = extract_thumbnails(reads, pool.registry, 3, expected);
  EXPECT_EQ(ex.thumbnails.size(), 2u);
  ASSERT_EQ(ex.undecodable.size(), 1u);
  EXPECT_EQ(ex.undecodable[0].image_id, 2u);
  EXPECT_EQ(ex.undecodable[0].code, ErrorCode::gap);
}
