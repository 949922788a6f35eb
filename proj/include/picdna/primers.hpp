#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "picdna/edit_distance.hpp"
#include "picdna/error.hpp"

namespace picdna {

inline constexpr std::size_t primer_length = 20;
inline constexpr int min_primer_distance = 8;
inline constexpr int default_tau = 3;
inline constexpr int max_primer_homopolymer = 3;
inline constexpr double min_primer_gc = 0.40;
inline constexpr double max_primer_gc = 0.60;
inline constexpr std::size_t max_primer_draws = 1'000'000;

struct Primer {
  std::string sequence;
  friend bool operator==(const Primer&, const Primer&) = default;
};

struct PrimerPair {
  Primer left;
  Primer right;
  friend bool operator==(const PrimerPair&, const PrimerPair&) = default;
};

/// Layer pairs are indexed by resolution level (pair 0 tags thumbnails),
/// image pairs by image id. Immutable once generated.
struct PrimerRegistry {
  std::uint64_t seed = 0;
  std::vector<PrimerPair> layer_pairs;
  std::vector<PrimerPair> image_pairs;

  std::size_t num_levels() const { return layer_pairs.size(); }
  std::size_t num_images() const { return image_pairs.size(); }

  /// Flat list: layer pairs (left, right) by level, then image pairs by id.
  /// A primer's id is its position here.
  std::vector<Primer> all_primers() const {
    std::vector<Primer> out;
    for (const auto* set : {&layer_pairs, &image_pairs})
      for (const auto& p : *set) {
        out.push_back(p.left);
        out.push_back(p.right);
      }
    return out;
  }

  friend bool operator==(const PrimerRegistry&, const PrimerRegistry&) = default;
};

// ---------------------------------------------------------------------------
// Sequence constraints

inline char complement(char n) {
  switch (n) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
    default: return 'N';
  }
}

inline std::string reverse_complement(std::string_view s) {
  std::string out(s.rbegin(), s.rend());
  for (auto& c : out) c = complement(c);
  return out;
}

inline int longest_homopolymer(std::string_view s) {
  int best = 0, run = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    run = (i > 0 && s[i] == s[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

inline double gc_fraction(std::string_view s) {
  if (s.empty()) return 0.0;
  std::size_t gc = 0;
  for (const char c : s) gc += (c == 'G' || c == 'C');
  return double(gc) / double(s.size());
}

inline bool primer_composition_ok(std::string_view s) {
  const double gc = gc_fraction(s);
  return s.size() == primer_length && longest_homopolymer(s) <= max_primer_homopolymer && gc >= min_primer_gc &&
         gc <= max_primer_gc;
}

// ---------------------------------------------------------------------------
// Generation

/// Rejection sampling over uniform 20-mers drawn from mt19937_64(seed), two
/// bits per nucleotide from the top of each draw. A candidate is kept iff it
/// meets the composition limits and lies at Hamming distance >= 8 from every
/// accepted primer, every accepted primer's reverse complement, and its own
/// reverse complement.
inline PrimerRegistry generate_registry(std::size_t n_levels, std::size_t n_images, std::uint64_t seed,
                                        std::size_t max_draws = max_primer_draws) {
  const std::size_t needed = 2 * (n_levels + n_images);
  if (needed > 4096) throw Error(ErrorCode::contract, "registry too large: 2*(levels+images) must be <= 4096");
  std::mt19937_64 rng(seed);
  std::vector<std::string> accepted, accepted_rc;
  std::size_t draws = 0;
  while (accepted.size() < needed) {
    if (draws++ >= max_draws)
      throw Error(ErrorCode::capacity, "primer generation exhausted its draw budget", long(accepted.size()));
    std::string cand(primer_length, 'A');
    for (auto& c : cand) c = "ACGT"[rng() >> 62];
    if (!primer_composition_ok(cand)) continue;
    const std::string rc = reverse_complement(cand);
    if (hamming(cand, rc) < min_primer_distance) continue;
    bool ok = true;
    for (std::size_t i = 0; i < accepted.size() && ok; ++i)
      ok = hamming(cand, accepted[i]) >= min_primer_distance && hamming(cand, accepted_rc[i]) >= min_primer_distance;
    if (!ok) continue;
    accepted.push_back(cand);
    accepted_rc.push_back(rc);
  }
  PrimerRegistry reg;
  reg.seed = seed;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n_levels; ++k, next += 2)
    reg.layer_pairs.push_back({{accepted[next]}, {accepted[next + 1]}});
  for (std::size_t i = 0; i < n_images; ++i, next += 2)
    reg.image_pairs.push_back({{accepted[next]}, {accepted[next + 1]}});
  return reg;
}

// ---------------------------------------------------------------------------
// Matching

/// Edit distance between `window` and `p` if it is within tau.
inline std::optional<int> match_primer(std::string_view window, const Primer& p, int tau) {
  if (tau < 0) throw Error(ErrorCode::contract, "tau must be >= 0");
  const int d = levenshtein(window, p.sequence);
  if (d <= tau) return d;
  return std::nullopt;
}

struct PrimerMatch {
  std::size_t id = 0;
  int distance = 0;
  friend bool operator==(const PrimerMatch&, const PrimerMatch&) = default;
};

/// Closest candidate by edit distance, ties to the lowest id. Throws
/// unidentified_primer when the best distance exceeds tau.
inline PrimerMatch nearest_primer(std::string_view observed, std::span<const Primer> candidates, int tau) {
  if (candidates.empty()) throw Error(ErrorCode::contract, "no candidate primers");
  PrimerMatch best{0, levenshtein(observed, candidates[0].sequence)};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const int d = levenshtein(observed, candidates[i].sequence);
    if (d < best.distance) best = {i, d};
  }
  if (best.distance > tau)
    throw Error(ErrorCode::unidentified_primer,
                "no registry primer within distance " + std::to_string(tau) + " of " + std::string(observed),
                best.distance);
  return best;
}

inline PrimerMatch nearest_registry_primer(std::string_view observed, const PrimerRegistry& reg, int tau = default_tau) {
  const auto all = reg.all_primers();
  return nearest_primer(observed, all, tau);
}

// ---------------------------------------------------------------------------
// JSON: {seed, layerPairs: [{k, left, right}], imagePairs: [{i, left, right}]}

inline nlohmann::json registry_to_json(const PrimerRegistry& reg) {
  nlohmann::json j;
  j["seed"] = reg.seed;
  j["layerPairs"] = nlohmann::json::array();
  for (std::size_t k = 0; k < reg.layer_pairs.size(); ++k)
    j["layerPairs"].push_back({{"k", k}, {"left", reg.layer_pairs[k].left.sequence}, {"right", reg.layer_pairs[k].right.sequence}});
  j["imagePairs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < reg.image_pairs.size(); ++i)
    j["imagePairs"].push_back({{"i", i}, {"left", reg.image_pairs[i].left.sequence}, {"right", reg.image_pairs[i].right.sequence}});
  return j;
}

inline PrimerRegistry registry_from_json(const nlohmann::json& j) {
  try {
    PrimerRegistry reg;
    reg.seed = j.at("seed").get<std::uint64_t>();
    auto read_pairs = [](const nlohmann::json& arr, const char* key) {
      std::vector<PrimerPair> pairs(arr.size());
      std::vector<bool> seen(arr.size(), false);
      for (const auto& e : arr) {
        const auto idx = e.at(key).get<std::size_t>();
        if (idx >= pairs.size() || seen[idx]) throw Error(ErrorCode::parse, std::string("registry: bad or duplicate ") + key);
        seen[idx] = true;
        pairs[idx] = {{e.at("left").get<std::string>()}, {e.at("right").get<std::string>()}};
        for (const auto* s : {&pairs[idx].left.sequence, &pairs[idx].right.sequence})
          if (s->size() != primer_length || s->find_first_not_of("ACGT") != std::string::npos)
            throw Error(ErrorCode::parse, "registry: primer must be 20 ACGT characters");
      }
      return pairs;
    };
    reg.layer_pairs = read_pairs(j.at("layerPairs"), "k");
    reg.image_pairs = read_pairs(j.at("imagePairs"), "i");
    return reg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("registry: ") + e.what());
  }
}

}  // namespace picdna
