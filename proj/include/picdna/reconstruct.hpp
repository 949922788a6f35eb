#pragma once

// Read-side decoding: primer trimming, clustering, consensus and per-layer
// stream recovery. Everything here works from reads plus the primer
// registry; the pool and its ground-truth provenance are deliberately not
// visible from this header.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <climits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "picdna/channel.hpp"
#include "picdna/edit_distance.hpp"
#include "picdna/erasure.hpp"
#include "picdna/error.hpp"
#include "picdna/image.hpp"
#include "picdna/layered_codec.hpp"
#include "picdna/primers.hpp"
#include "picdna/transcoder.hpp"

namespace picdna {

// ---------------------------------------------------------------------------
// Trimming

enum class TrimReject { none, too_short, no_left_primer, no_right_primer, layer_mismatch };

inline std::string_view to_string(TrimReject r) {
  switch (r) {
    case TrimReject::none: return "none";
    case TrimReject::too_short: return "too_short";
    case TrimReject::no_left_primer: return "no_left_primer";
    case TrimReject::no_right_primer: return "no_right_primer";
    case TrimReject::layer_mismatch: return "layer_mismatch";
  }
  return "unknown";
}

struct TrimmedRead {
  std::optional<std::size_t> layer_id;
  std::string left_window;   // observed image-primer windows
  std::string right_window;
  std::string inner;         // nominally 192 nt
  friend bool operator==(const TrimmedRead&, const TrimmedRead&) = default;
};

struct TrimOutcome {
  std::optional<TrimmedRead> read;
  TrimReject reason = TrimReject::none;
};

/// Registry primers arranged for matching; right primers are stored
/// reversed so both ends are matched as prefixes.
struct PrimerIndex {
  std::vector<std::string> layer_left, layer_right_rev, image_left, image_right_rev;
  std::unordered_map<std::string, std::size_t> exact_layer_left, exact_layer_right_rev, exact_image_left,
      exact_image_right_rev;

  explicit PrimerIndex(const PrimerRegistry& reg) {
    auto add = [](std::vector<std::string>& list, std::unordered_map<std::string, std::size_t>& exact, std::string s) {
      exact.emplace(s, list.size());
      list.push_back(std::move(s));
    };
    for (const auto& p : reg.layer_pairs) {
      add(layer_left, exact_layer_left, p.left.sequence);
      add(layer_right_rev, exact_layer_right_rev, {p.right.sequence.rbegin(), p.right.sequence.rend()});
    }
    for (const auto& p : reg.image_pairs) {
      add(image_left, exact_image_left, p.left.sequence);
      add(image_right_rev, exact_image_right_rev, {p.right.sequence.rbegin(), p.right.sequence.rend()});
    }
  }
};

namespace detail {

struct PrimerHit {
  std::size_t id = 0;
  int distance = 0;
  std::vector<std::size_t> lengths;  // every text length achieving `distance`, closest to 20 first
};

/// Best candidate occupying a prefix of `text` of length 20 +- tau; ties go
/// to the lower id.
inline std::optional<PrimerHit> best_prefix_match(std::string_view text, const std::vector<std::string>& candidates,
                                                  const std::unordered_map<std::string, std::size_t>& exact, int tau) {
  if (text.size() >= primer_length) {
    const auto it = exact.find(std::string(text.substr(0, primer_length)));
    if (it != exact.end()) return PrimerHit{it->second, 0, {primer_length}};
  }
  if (tau == 0) return std::nullopt;
  const auto window = text.substr(0, std::min(text.size(), primer_length + std::size_t(tau)));
  const std::size_t lo = primer_length > std::size_t(tau) ? primer_length - std::size_t(tau) : 0;
  std::optional<PrimerHit> best;
  for (std::size_t id = 0; id < candidates.size(); ++id) {
    const auto d = prefix_distances(candidates[id], window);
    for (std::size_t len = lo; len < d.size(); ++len) {
      if (!best || d[len] < best->distance) best = PrimerHit{id, d[len], {len}};
      else if (d[len] == best->distance && best->id == id) best->lengths.push_back(len);
    }
  }
  if (!best || best->distance > tau) return std::nullopt;
  auto off = [](std::size_t l) { return l > primer_length ? l - primer_length : primer_length - l; };
  std::stable_sort(best->lengths.begin(), best->lengths.end(), [&](auto a, auto b) { return off(a) < off(b); });
  return best;
}

inline std::string reversed(std::string_view s) { return {s.rbegin(), s.rend()}; }

}  // namespace detail

inline TrimOutcome trim_and_identify(std::string_view read, const PrimerIndex& index, int tau) {
  if (tau < 0) throw Error(ErrorCode::contract, "tau must be >= 0");
  if (read.size() < 4 * primer_length) return {std::nullopt, TrimReject::too_short};
  const auto left = detail::best_prefix_match(read, index.layer_left, index.exact_layer_left, tau);
  if (!left) return {std::nullopt, TrimReject::no_left_primer};
  const auto rev = detail::reversed(read);
  const auto right = detail::best_prefix_match(rev, index.layer_right_rev, index.exact_layer_right_rev, tau);
  if (!right) return {std::nullopt, TrimReject::no_right_primer};
  if (left->id != right->id) return {std::nullopt, TrimReject::layer_mismatch};
  const auto llen0 = left->lengths.front(), rlen0 = right->lengths.front();
  if (llen0 + rlen0 + 2 * primer_length > read.size()) return {std::nullopt, TrimReject::too_short};

  const auto mid = read.substr(llen0, read.size() - llen0 - rlen0);
  const auto il = detail::best_prefix_match(mid, index.image_left, index.exact_image_left, tau);
  const auto mid_rev = detail::reversed(mid);
  const auto ir = detail::best_prefix_match(mid_rev, index.image_right_rev, index.exact_image_right_rev, tau);
  // A primer edit next to the block often ties with consuming a block base;
  // among equally good boundaries take the one leaving 192 nt inside.
  const std::vector<std::size_t> nominal{primer_length};
  std::size_t llen = primer_length, rlen = primer_length, best_gap = SIZE_MAX;
  for (const auto l : il ? il->lengths : nominal)
    for (const auto r : ir ? ir->lengths : nominal) {
      if (l + r > mid.size()) continue;
      const auto inner = mid.size() - l - r;
      const auto gap = inner > block_nucleotides ? inner - block_nucleotides : block_nucleotides - inner;
      if (gap < best_gap) {
        best_gap = gap;
        llen = l;
        rlen = r;
      }
    }
  if (best_gap == SIZE_MAX) return {std::nullopt, TrimReject::too_short};

  TrimmedRead t;
  t.layer_id = left->id;
  t.left_window = std::string(mid.substr(0, llen));
  t.right_window = std::string(mid.substr(mid.size() - rlen));
  t.inner = std::string(mid.substr(llen, mid.size() - llen - rlen));
  return {std::move(t), TrimReject::none};
}

inline TrimOutcome trim_and_identify(std::string_view read, const PrimerRegistry& registry, int tau = default_tau) {
  return trim_and_identify(read, PrimerIndex(registry), tau);
}

// ---------------------------------------------------------------------------
// Clustering

struct ClusterKey {
  std::size_t image = 0;
  std::size_t layer = 0;
  std::optional<std::uint32_t> index;  // empty for the rescue cluster
  friend auto operator<=>(const ClusterKey&, const ClusterKey&) = default;
};

struct Cluster {
  ClusterKey key;
  std::vector<std::string> members;  // inner-block nucleotide strings
};

struct Clustering {
  std::vector<Cluster> keyed;    // sorted by key
  std::vector<Cluster> rescue;   // one per (image, layer) with CRC-failed reads
  std::size_t unassigned = 0;    // image primers did not snap consistently
};

/// Image id both observed windows snap to, if they agree.
inline std::optional<std::size_t> snap_image(const TrimmedRead& t, const PrimerIndex& index, int tau) {
  auto snap = [&](const std::string& window, const std::vector<std::string>& list,
                  const std::unordered_map<std::string, std::size_t>& exact) -> std::optional<std::size_t> {
    if (const auto it = exact.find(window); it != exact.end()) return it->second;
    std::optional<std::size_t> best;
    int best_d = tau + 1;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const int d = levenshtein(window, list[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  const auto l = snap(t.left_window, index.image_left, index.exact_image_left);
  const auto r = snap(detail::reversed(t.right_window), index.image_right_rev, index.exact_image_right_rev);
  if (!l || !r || *l != *r) return std::nullopt;
  return l;
}

inline char rotation_seed(const PrimerRegistry& registry, std::size_t image) {
  return registry.image_pairs.at(image).left.sequence.back();
}

inline Clustering cluster_reads(std::span<const TrimmedRead> trimmed, const PrimerRegistry& registry,
                                int tau = default_tau) {
  const PrimerIndex index(registry);
  std::map<ClusterKey, std::vector<std::string>> keyed, rescue;
  Clustering out;
  for (const auto& t : trimmed) {
    const auto image = snap_image(t, index, tau);
    if (!image || !t.layer_id) {
      ++out.unassigned;
      continue;
    }
    ClusterKey key{*image, *t.layer_id, std::nullopt};
    if (const auto block = try_decode_block(t.inner, rotation_seed(registry, *image))) {
      key.index = block->index;
      keyed[key].push_back(t.inner);
    } else {
      rescue[key].push_back(t.inner);
    }
  }
  for (auto& [k, m] : keyed) out.keyed.push_back({k, std::move(m)});
  for (auto& [k, m] : rescue) out.rescue.push_back({k, std::move(m)});
  return out;
}

// ---------------------------------------------------------------------------
// Consensus

namespace detail {

inline constexpr char gap = '-';
inline constexpr std::array<char, 5> vote_symbols{'A', 'C', 'G', 'T', gap};

inline int symbol_slot(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return 4;
  }
}

/// Per-position plurality over the members of modal length; ties go to
/// the lexicographically smallest base.
inline std::string plurality_vote(std::span<const std::string> members) {
  std::map<std::size_t, std::size_t> lengths;
  for (const auto& m : members) ++lengths[m.size()];
  std::size_t modal = 0, best = 0;
  for (const auto& [len, n] : lengths)
    if (n > best || (n == best && len == block_nucleotides)) {
      modal = len;
      best = n;
    }
  std::string out(modal, 'A');
  for (std::size_t i = 0; i < modal; ++i) {
    std::array<int, 5> c{};
    for (const auto& m : members)
      if (m.size() == modal) ++c[std::size_t(symbol_slot(m[i]))];
    out[i] = vote_symbols[std::size_t(std::max_element(c.begin(), c.begin() + 4) - c.begin())];
  }
  return out;
}

/// Column profile of reads aligned against a draft: base/gap votes per
/// draft position and first-inserted-base votes per slot before it.
struct Profile {
  std::vector<std::array<int, 5>> column;
  std::vector<std::array<int, 4>> insert;  // slot i precedes draft position i
  int depth = 0;
};

/// One step of an alignment of a read against a draft, in draft coordinates:
/// a base (or gap) aligned to draft position `pos`, or a base inserted before it.
struct AlignStep {
  std::size_t pos = 0;
  bool insertion = false;
  char base = gap;
};

/// Banded global edit alignment of `read` against `draft`, steps returned in
/// reverse order (as the traceback visits them). Empty when outside the band.
inline std::vector<AlignStep> align_steps(std::string_view draft, std::string_view read, int band = 12) {
  const int n = int(draft.size()), m = int(read.size());
  const int width = band + std::abs(n - m);
  constexpr int inf = 1 << 28;
  std::vector<int> dp(std::size_t(n + 1) * std::size_t(m + 1), inf);
  auto at = [&](int i, int j) -> int& { return dp[std::size_t(i) * std::size_t(m + 1) + std::size_t(j)]; };
  for (int i = 0; i <= n; ++i) {
    const int lo = std::max(0, i - width), hi = std::min(m, i + width);
    for (int j = lo; j <= hi; ++j) {
      if (i == 0 && j == 0) {
        at(0, 0) = 0;
        continue;
      }
      int v = inf;
      if (i > 0 && j > 0) v = at(i - 1, j - 1) + (draft[std::size_t(i - 1)] != read[std::size_t(j - 1)]);
      if (i > 0 && at(i - 1, j) + 1 < v) v = at(i - 1, j) + 1;
      if (j > 0 && at(i, j - 1) + 1 < v) v = at(i, j - 1) + 1;
      at(i, j) = v;
    }
  }
  std::vector<AlignStep> steps;
  if (at(n, m) >= inf) return steps;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (draft[std::size_t(i - 1)] != read[std::size_t(j - 1)])) {
      steps.push_back({std::size_t(i - 1), false, read[std::size_t(j - 1)]});
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      steps.push_back({std::size_t(i - 1), false, gap});
      --i;
    } else {
      steps.push_back({std::size_t(i), true, read[std::size_t(j - 1)]});
      --j;
    }
  }
  return steps;
}

/// Accumulates one read's alignment into the profile.
inline void align_into(std::string_view draft, std::string_view read, Profile& prof, int band = 12) {
  const auto steps = align_steps(draft, read, band);
  if (steps.empty() && !(draft.empty() && read.empty())) return;
  ++prof.depth;
  int last_insert_slot = -1;
  char last_inserted = gap;
  for (const auto& st : steps) {
    if (!st.insertion) {
      ++prof.column[st.pos][std::size_t(symbol_slot(st.base))];
      continue;
    }
    // Walking backwards, the last base seen in a slot is the first inserted.
    if (last_insert_slot == int(st.pos)) --prof.insert[st.pos][std::size_t(symbol_slot(last_inserted))];
    ++prof.insert[st.pos][std::size_t(symbol_slot(st.base))];
    last_insert_slot = int(st.pos);
    last_inserted = st.base;
  }
}

struct ConsensusDraft {
  std::string sequence;
  // Each ambiguous site lists the alternative spellings of one profile
  // position (a base or nothing), in the order they are tried.
  struct Site {
    std::size_t position = 0;  // index into `pieces`
    std::vector<std::string> options;
  };
  std::vector<std::string> pieces;
  std::vector<Site> ambiguous;
};

inline ConsensusDraft profile_consensus(std::string_view draft, std::span<const std::string> members) {
  Profile prof;
  prof.column.assign(draft.size(), {});
  prof.insert.assign(draft.size() + 1, {});
  for (const auto& m : members) align_into(draft, m, prof);

  ConsensusDraft out;
  const int depth = std::max(prof.depth, 1);
  for (std::size_t i = 0; i <= draft.size(); ++i) {
    const auto& ins = prof.insert[i];
    const int total = ins[0] + ins[1] + ins[2] + ins[3];
    if (total > 0) {
      const auto b = std::size_t(std::max_element(ins.begin(), ins.end()) - ins.begin());
      const std::string base(1, vote_symbols[b]);
      if (2 * total > depth) {
        out.pieces.push_back(base);
      } else {
        out.pieces.emplace_back();
        if (2 * total == depth) out.ambiguous.push_back({out.pieces.size() - 1, {"", base}});
      }
    }
    if (i == draft.size()) break;
    const auto& col = prof.column[i];
    const int top = *std::max_element(col.begin(), col.end());
    std::vector<std::string> tied;
    const int own = symbol_slot(draft[i]);
    if (col[std::size_t(own)] == top) tied.emplace_back(own == 4 ? "" : std::string(1, draft[i]));
    for (std::size_t s = 0; s < 5; ++s)
      if (col[s] == top && int(s) != own) tied.emplace_back(s == 4 ? "" : std::string(1, vote_symbols[s]));
    out.pieces.push_back(tied.front());
    if (tied.size() > 1) out.ambiguous.push_back({out.pieces.size() - 1, tied});
  }
  for (const auto& p : out.pieces) out.sequence += p;
  return out;
}

/// Tries every combination of ambiguous sites (bounded) for a CRC-valid,
/// correctly sized block.
template <class Accept>
std::optional<DataBlock> enumerate_ambiguity(ConsensusDraft d, char prev, Accept accept, std::size_t max_sites = 8) {
  if (d.ambiguous.empty() || d.ambiguous.size() > max_sites) return std::nullopt;
  std::vector<std::size_t> choice(d.ambiguous.size(), 0);
  while (true) {
    std::size_t len = 0;
    for (std::size_t s = 0; s < choice.size(); ++s) d.pieces[d.ambiguous[s].position] = d.ambiguous[s].options[choice[s]];
    for (const auto& p : d.pieces) len += p.size();
    if (len == block_nucleotides) {
      std::string seq;
      seq.reserve(len);
      for (const auto& p : d.pieces) seq += p;
      if (auto b = try_decode_block(seq, prev); b && accept(*b)) return b;
    }
    std::size_t s = 0;
    while (s < choice.size() && ++choice[s] == d.ambiguous[s].options.size()) choice[s++] = 0;
    if (s == choice.size()) return std::nullopt;
  }
}

/// Edits proposed by individual members against the draft, tried singly and
/// in pairs (most supported first) when the vote is one or two edits off.
/// Limited to `max_tries` CRC checks to keep false positives rare.
template <class Accept>
std::optional<DataBlock> try_member_edits(const std::string& draft, std::span<const std::string> members, char prev,
                                          Accept accept, std::size_t max_tries = 128) {
  struct Edit {
    std::size_t pos;
    bool insertion;
    char base;
    auto operator<=>(const Edit&) const = default;
  };
  std::map<Edit, int> support;
  for (const auto& m : members)
    for (const auto& st : align_steps(draft, m))
      if (st.insertion || st.base != draft[st.pos]) ++support[{st.pos, st.insertion, st.base}];
  std::vector<std::pair<int, Edit>> ranked;
  for (const auto& [e, n] : support) ranked.emplace_back(n, e);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  // Edits are applied right to left so positions stay valid.
  auto apply = [&](std::vector<Edit> edits) {
    std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.pos > b.pos; });
    std::string out = draft;
    for (const auto& e : edits) {
      if (e.insertion) out.insert(e.pos, 1, e.base);
      else if (e.base == gap) out.erase(e.pos, 1);
      else out[e.pos] = e.base;
    }
    return out;
  };
  auto length_after = [&](std::initializer_list<Edit> edits) {
    long len = long(draft.size());
    for (const auto& e : edits) len += e.insertion ? 1 : e.base == gap ? -1 : 0;
    return len;
  };
  std::size_t tries = 0;
  auto attempt = [&](std::vector<Edit> edits) -> std::optional<DataBlock> {
    ++tries;
    if (auto b = try_decode_block(apply(std::move(edits)), prev); b && accept(*b)) return b;
    return std::nullopt;
  };
  for (const auto& [n, e] : ranked) {
    if (tries >= max_tries) return std::nullopt;
    if (length_after({e}) == long(block_nucleotides))
      if (auto b = attempt({e})) return b;
  }
  for (std::size_t a = 0; a < ranked.size(); ++a)
    for (std::size_t b = a + 1; b < ranked.size(); ++b) {
      const auto& ea = ranked[a].second;
      const auto& eb = ranked[b].second;
      if (ea.pos == eb.pos && ea.insertion == eb.insertion) continue;
      if (length_after({ea, eb}) != long(block_nucleotides)) continue;
      if (tries >= max_tries) return std::nullopt;
      if (auto blk = attempt({ea, eb})) return blk;
    }
  return std::nullopt;
}

}  // namespace detail

/// Consensus over noisy copies of one block. Order of attempts: plurality
/// vote over modal-length members, each member on its own, then an
/// alignment-based profile vote with bounded enumeration of tied sites.
/// Every outcome is CRC-gated and must satisfy `accept`.
template <class Accept>
std::optional<DataBlock> consensus_block(std::span<const std::string> members, char prev, Accept accept) {
  if (members.empty()) return std::nullopt;
  const auto voted = detail::plurality_vote(members);
  if (auto b = try_decode_block(voted, prev); b && accept(*b)) return b;
  for (const auto& m : members)
    if (auto b = try_decode_block(m, prev); b && accept(*b)) return b;
  if (members.size() < 2) return std::nullopt;

  std::string draft = voted;
  if (draft.size() != block_nucleotides)
    for (const auto& m : members)
      if (m.size() == block_nucleotides) {
        draft = m;
        break;
      }
  for (int round = 0; round < 3; ++round) {
    auto d = detail::profile_consensus(draft, members);
    if (auto b = try_decode_block(d.sequence, prev); b && accept(*b)) return b;
    if (auto b = detail::enumerate_ambiguity(d, prev, accept)) return b;
    if (d.sequence == draft) break;
    draft = std::move(d.sequence);
  }
  return detail::try_member_edits(draft, members, prev, accept);
}

inline std::optional<DataBlock> consensus_block(std::span<const std::string> members, char prev) {
  return consensus_block(members, prev, [](const DataBlock&) { return true; });
}

/// Consensus for one cluster; a keyed cluster must reproduce its own index.
inline DataBlock consensus(const Cluster& cluster, const PrimerRegistry& registry) {
  if (cluster.members.empty()) throw Error(ErrorCode::contract, "empty cluster");
  const auto want = cluster.key.index;
  const auto b = consensus_block(cluster.members, rotation_seed(registry, cluster.key.image),
                                 [&](const DataBlock& blk) { return !want || blk.index == *want; });
  if (!b)
    throw Error(ErrorCode::consensus_failure,
                "no CRC-valid consensus for image " + std::to_string(cluster.key.image) + " layer " +
                    std::to_string(cluster.key.layer) + " block " + (want ? std::to_string(*want) : std::string("?")),
                want ? (long long)*want : -1);
  return *b;
}

// ---------------------------------------------------------------------------
// Rescue: CRC-failed reads are grouped by shared k-mers, with solved blocks
// pre-indexed so that stray copies of them are absorbed rather than forming
// clusters of their own.

namespace detail {

inline constexpr std::size_t rescue_k = 12;
inline constexpr std::size_t header_nucleotides = block_header_bytes / bytes_per_group * trits_per_group;
inline constexpr int rescue_min_votes = 20;
inline constexpr std::size_t rescue_max_postings = 64;
// Candidate groups are confirmed by edit distance to their first sequence;
// k-mer votes alone merge blocks whose payloads are low in entropy.
inline constexpr std::size_t rescue_candidates = 4;
inline constexpr int rescue_max_distance = 14;

/// Edit distance if it is at most `limit`, otherwise limit + 1.
inline int banded_distance(std::string_view a, std::string_view b, int limit) {
  const int n = int(a.size()), m = int(b.size());
  if (std::abs(n - m) > limit) return limit + 1;
  const int big = limit + 1;
  std::vector<int> prev(std::size_t(m + 1), big), cur(std::size_t(m + 1), big);
  for (int j = 0; j <= std::min(m, limit); ++j) prev[std::size_t(j)] = j;
  for (int i = 1; i <= n; ++i) {
    const int lo = std::max(1, i - limit), hi = std::min(m, i + limit);
    std::fill(cur.begin(), cur.end(), big);
    if (i <= limit) cur[0] = i;
    int row_min = cur[0];
    for (int j = lo; j <= hi; ++j) {
      int v = prev[std::size_t(j - 1)] + (a[std::size_t(i - 1)] != b[std::size_t(j - 1)]);
      v = std::min({v, prev[std::size_t(j)] + 1, cur[std::size_t(j - 1)] + 1});
      cur[std::size_t(j)] = std::min(v, big);
      row_min = std::min(row_min, cur[std::size_t(j)]);
    }
    if (row_min > limit) return big;
    std::swap(prev, cur);
  }
  return std::min(prev[std::size_t(m)], big);
}

inline std::vector<std::pair<std::uint32_t, std::size_t>> kmers(std::string_view s) {
  std::vector<std::pair<std::uint32_t, std::size_t>> out;
  if (s.size() < rescue_k) return out;
  std::uint32_t code = 0;
  const std::uint32_t mask = (1u << (2 * rescue_k)) - 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    code = ((code << 2) | std::uint32_t(symbol_slot(s[i]) & 3)) & mask;
    if (i + 1 >= rescue_k) out.emplace_back(code, i + 1 - rescue_k);
  }
  return out;
}

}  // namespace detail

struct RescueStats {
  std::size_t clusters = 0;
  std::size_t failures = 0;
  std::size_t recovered = 0;
  std::size_t absorbed = 0;  // reads matched to an already solved block
};

/// Plausible index for a block of this layer given what is already known.
inline bool plausible_index(std::uint32_t index, std::uint32_t known_count) {
  const std::uint32_t limit = known_count + 64;
  if (!is_parity_index(index)) return index < limit;
  const auto p = unpack_parity_index(index);
  return p.stride >= 1 && p.count >= 1 && p.count <= p.stride && p.group * p.stride < limit;
}

inline std::vector<DataBlock> rescue_blocks(std::span<const std::string> reads, const std::vector<DataBlock>& solved,
                                            char prev, RescueStats& stats) {
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> postings;
  std::vector<std::vector<std::string>> groups;
  std::vector<std::string> seeds;  // first sequence of each group
  std::vector<bool> is_solved;
  auto index_sequence = [&](std::string_view s, std::uint32_t group) {
    for (const auto& [code, pos] : detail::kmers(s)) {
      auto& p = postings[code];
      if (p.size() < detail::rescue_max_postings && (p.empty() || p.back() != group)) p.push_back(group);
    }
  };
  for (const auto& b : solved) {
    seeds.push_back(encode_block_nucleotides(b, prev));
    index_sequence(seeds.back(), std::uint32_t(groups.size()));
    groups.emplace_back();
    is_solved.push_back(true);
  }

  std::unordered_map<std::uint32_t, std::pair<int, int>> votes;  // group -> (total, header)
  for (const auto& r : reads) {
    votes.clear();
    for (const auto& [code, pos] : detail::kmers(r)) {
      const auto it = postings.find(code);
      if (it == postings.end()) continue;
      for (const auto g : it->second) {
        auto& v = votes[g];
        ++v.first;
        if (pos + detail::rescue_k <= detail::header_nucleotides + 4) ++v.second;
      }
    }
    std::vector<std::pair<int, std::uint32_t>> ranked;  // (-votes, group)
    for (const auto& [g, v] : votes)
      if (v.first >= detail::rescue_min_votes && v.second > 0) ranked.emplace_back(-v.first, g);
    const auto top = std::min(ranked.size(), detail::rescue_candidates);
    std::partial_sort(ranked.begin(), ranked.begin() + std::ptrdiff_t(top), ranked.end());
    std::optional<std::uint32_t> best;
    int best_distance = detail::rescue_max_distance + 1;
    for (std::size_t c = 0; c < top; ++c) {
      const auto g = ranked[c].second;
      const int d = detail::banded_distance(r, seeds[g], best_distance - 1);
      if (d < best_distance) {
        best = g;
        best_distance = d;
      }
    }
    if (best) {
      if (is_solved[*best]) ++stats.absorbed;
      else groups[*best].push_back(r);
      continue;
    }
    index_sequence(r, std::uint32_t(groups.size()));
    seeds.push_back(r);
    groups.push_back({r});
    is_solved.push_back(false);
  }

  std::set<std::uint32_t> known;
  for (const auto& b : solved) known.insert(b.index);
  const auto count = implied_data_count(solved);
  std::vector<DataBlock> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (is_solved[g] || groups[g].empty()) continue;
    ++stats.clusters;
    const auto b = consensus_block(groups[g], prev, [&](const DataBlock& blk) {
      return !known.count(blk.index) && plausible_index(blk.index, count);
    });
    if (!b) {
      ++stats.failures;
      continue;
    }
    known.insert(b->index);
    out.push_back(*b);
    ++stats.recovered;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole read sets

struct LayerTrace {
  std::size_t image = 0;
  std::size_t layer = 0;
  std::size_t oligos_selected = 0;  // filled in by the orchestrator
  std::size_t reads_seen = 0;
  std::size_t clusters_formed = 0;
  std::size_t consensus_failures = 0;
  std::size_t blocks_recovered = 0;  // distinct CRC-valid blocks, data + parity
  std::size_t rescued = 0;
  std::size_t parity_repaired = 0;
  std::size_t data_blocks = 0;  // data blocks in hand after parity repair
  std::size_t bytes_recovered = 0;
};

struct RecoveredLayer {
  std::vector<DataBlock> blocks;  // CRC-valid, sorted by index, data + parity
  LayerTrace trace;
};

struct Reconstruction {
  std::map<std::pair<std::size_t, std::size_t>, RecoveredLayer> layers;  // (image, layer)
  std::size_t reads = 0;
  std::size_t rejected = 0;
  std::size_t unassigned = 0;
  std::map<TrimReject, std::size_t> reject_reasons;
};

struct ReconstructOptions {
  int tau = default_tau;
  std::optional<std::size_t> only_layer;  // ignore reads of other layers
};

inline Reconstruction reconstruct_reads(const ReadSet& reads, const PrimerRegistry& registry,
                                        const ReconstructOptions& opt = {}) {
  const PrimerIndex index(registry);
  Reconstruction out;
  out.reads = reads.reads.size();
  std::vector<TrimmedRead> trimmed;
  trimmed.reserve(reads.reads.size());
  for (const auto& r : reads.reads) {
    auto t = trim_and_identify(r, index, opt.tau);
    if (!t.read) {
      ++out.rejected;
      ++out.reject_reasons[t.reason];
      continue;
    }
    if (opt.only_layer && t.read->layer_id != opt.only_layer) continue;
    trimmed.push_back(std::move(*t.read));
  }
  auto clusters = cluster_reads(trimmed, registry, opt.tau);
  out.unassigned = clusters.unassigned;

  auto layer = [&](std::size_t image, std::size_t k) -> RecoveredLayer& {
    auto& l = out.layers[{image, k}];
    l.trace.image = image;
    l.trace.layer = k;
    return l;
  };
  for (const auto& c : clusters.keyed) {
    auto& l = layer(c.key.image, c.key.layer);
    l.trace.reads_seen += c.members.size();
    ++l.trace.clusters_formed;
    try {
      l.blocks.push_back(consensus(c, registry));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::consensus_failure) throw;
      ++l.trace.consensus_failures;
    }
  }
  for (const auto& c : clusters.rescue) {
    auto& l = layer(c.key.image, c.key.layer);
    l.trace.reads_seen += c.members.size();
    RescueStats stats;
    auto extra = rescue_blocks(c.members, l.blocks, rotation_seed(registry, c.key.image), stats);
    l.trace.clusters_formed += stats.clusters;
    l.trace.consensus_failures += stats.failures;
    l.trace.rescued += stats.recovered;
    l.blocks.insert(l.blocks.end(), extra.begin(), extra.end());
  }
  for (auto& [key, l] : out.layers) {
    std::sort(l.blocks.begin(), l.blocks.end(), [](const DataBlock& a, const DataBlock& b) { return a.index < b.index; });
    l.trace.blocks_recovered = l.blocks.size();
  }
  return out;
}

/// Repairs erasures, reassembles the layer byte stream and parses it.
inline LayerContainer recover_layer_container(RecoveredLayer& layer) {
  const auto n = implied_data_count(layer.blocks);
  auto repaired = repair_erasures(layer.blocks);
  layer.trace.parity_repaired = repaired.recovered;
  layer.trace.data_blocks = repaired.data.size();
  for (std::uint32_t i = 0; i < n; ++i)
    if (i >= repaired.data.size() || repaired.data[i].index != i)
      throw Error(ErrorCode::gap, "layer " + std::to_string(layer.trace.layer) + " misses block " + std::to_string(i), i);
  const auto bytes = stream_from_blocks(std::move(repaired.data));
  layer.trace.bytes_recovered = bytes.size();
  auto container = parse_container(bytes);
  if (container.layer_index != layer.trace.layer)
    throw Error(ErrorCode::structure, "container claims layer " + std::to_string(container.layer_index),
                (long long)layer.trace.layer);
  return container;
}

// ---------------------------------------------------------------------------
// Thumbnails

struct Thumbnail {
  std::size_t image_id = 0;
  Image image;
  PrimerPair pair;
};

struct UndecodableImage {
  std::size_t image_id = 0;
  ErrorCode code = ErrorCode::gap;
  std::string message;
};

struct ThumbnailExtraction {
  std::vector<Thumbnail> thumbnails;
  std::vector<UndecodableImage> undecodable;
  std::vector<LayerTrace> traces;
};

/// Decodes every layer-0 image found in `reads`. Images listed in
/// `expected` (default: all registry images) without a decodable thumbnail
/// are reported as undecodable.
inline ThumbnailExtraction extract_thumbnails(const ReadSet& reads, const PrimerRegistry& registry,
                                              int tau = default_tau, std::span<const std::size_t> expected = {}) {
  ReconstructOptions opt;
  opt.tau = tau;
  opt.only_layer = 0;
  auto rec = reconstruct_reads(reads, registry, opt);
  ThumbnailExtraction out;
  std::set<std::size_t> wanted(expected.begin(), expected.end());
  if (expected.empty())
    for (std::size_t i = 0; i < registry.image_pairs.size(); ++i) wanted.insert(i);
  std::set<std::size_t> decoded;
  for (auto& [key, layer] : rec.layers) {
    const auto image = key.first;
    try {
      const auto c = recover_layer_container(layer);
      out.thumbnails.push_back({image, decode_layers(std::span<const LayerContainer>(&c, 1), 0), registry.image_pairs[image]});
      decoded.insert(image);
    } catch (const Error& e) {
      out.undecodable.push_back({image, e.code(), e.what()});
      decoded.insert(image);
    }
    out.traces.push_back(layer.trace);
  }
  for (const auto id : wanted)
    if (!decoded.count(id)) out.undecodable.push_back({id, ErrorCode::gap, "no thumbnail reads for image " + std::to_string(id)});
  std::sort(out.undecodable.begin(), out.undecodable.end(),
            [](const UndecodableImage& a, const UndecodableImage& b) { return a.image_id < b.image_id; });
  return out;
}

}  // namespace picdna
