#pragma once

// Sequencing channel: coverage sampling plus substitution / insertion /
// deletion noise. Each input strand draws from its own substream derived
// from (seed, ordinal), so results do not depend on evaluation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "picdna/error.hpp"

namespace picdna {

struct ErrorRates {
  double sub = 0.004;
  double ins = 0.002;
  double del = 0.006;

  static ErrorRates zero() { return {0.0, 0.0, 0.0}; }

  void validate() const {
    for (const double r : {sub, ins, del})
      if (!(r >= 0.0 && r <= 0.2)) throw Error(ErrorCode::contract, "error rates must lie in [0, 0.2]");
    if (sub + ins + del >= 1.0) throw Error(ErrorCode::contract, "sub + ins + del must be < 1");
  }
  friend bool operator==(const ErrorRates&, const ErrorRates&) = default;
};

enum class SequencingMode { poisson, exact };

inline std::string_view to_string(SequencingMode m) { return m == SequencingMode::poisson ? "poisson" : "exact"; }

inline SequencingMode sequencing_mode_from_string(std::string_view s) {
  if (s == "poisson") return SequencingMode::poisson;
  if (s == "exact") return SequencingMode::exact;
  throw Error(ErrorCode::parse, "unknown sequencing mode '" + std::string(s) + "'");
}

struct ReadSet {
  std::vector<std::string> reads;
  std::uint64_t seed = 0;
  ErrorRates rates;
  double nominal_coverage = 0.0;
  SequencingMode mode = SequencingMode::poisson;

  std::size_t nucleotides() const {
    std::size_t n = 0;
    for (const auto& r : reads) n += r.size();
    return n;
  }
  friend bool operator==(const ReadSet&, const ReadSet&) = default;
};

/// splitmix64 finalizer; derives independent seeds from (seed, stream).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// One left-to-right pass; a single uniform per position picks the event.
template <class Rng>
std::string corrupt(std::string_view seq, const ErrorRates& rates, Rng& rng) {
  static constexpr char bases[4] = {'A', 'C', 'G', 'T'};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string out;
  out.reserve(seq.size() + 8);
  for (const char c : seq) {
    const double x = u(rng);
    if (x < rates.del) continue;
    if (x < rates.del + rates.ins) {
      out.push_back(bases[rng() & 3]);
      out.push_back(c);
    } else if (x < rates.del + rates.ins + rates.sub) {
      char alt;
      do alt = bases[rng() & 3];
      while (alt == c);
      out.push_back(alt);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

namespace detail {

template <class T>
std::string_view strand_of(const T& item) {
  if constexpr (std::is_convertible_v<const T&, std::string_view>)
    return item;
  else
    return item.sequence;
}

}  // namespace detail

/// Reads for every element of `selection` (strings or anything with a
/// `.sequence`), shuffled. Duplicates in the selection are separate copies.
template <class Selection>
ReadSet sequence(const Selection& selection, double coverage, const ErrorRates& rates, std::uint64_t seed,
                 SequencingMode mode = SequencingMode::poisson) {
  rates.validate();
  if (!(coverage >= 0.0) || !std::isfinite(coverage)) throw Error(ErrorCode::contract, "coverage must be >= 0");
  if (mode == SequencingMode::exact && coverage != std::floor(coverage))
    throw Error(ErrorCode::contract, "exact mode needs an integer coverage");

  ReadSet rs;
  rs.seed = seed;
  rs.rates = rates;
  rs.nominal_coverage = coverage;
  rs.mode = mode;
  if (coverage == 0.0) return rs;

  std::uint64_t ordinal = 0;
  for (const auto& item : selection) {
    const auto strand = detail::strand_of(item);
    std::mt19937_64 rng(mix_seed(seed, ordinal++));
    std::size_t n;
    if (mode == SequencingMode::exact) {
      n = std::size_t(coverage);
    } else {
      std::poisson_distribution<std::size_t> poisson(coverage);
      n = poisson(rng);
    }
    for (std::size_t r = 0; r < n; ++r) rs.reads.push_back(corrupt(strand, rates, rng));
  }
  std::mt19937_64 shuffler(mix_seed(seed, ~std::uint64_t(0)));
  std::shuffle(rs.reads.begin(), rs.reads.end(), shuffler);
  return rs;
}

// ---------------------------------------------------------------------------
// Persistence: reads as FASTA (">r<n>") plus a JSON sidecar at <path>.json

inline nlohmann::json readset_meta(const ReadSet& rs) {
  return {{"seed", rs.seed},
          {"rates", {{"sub", rs.rates.sub}, {"ins", rs.rates.ins}, {"del", rs.rates.del}}},
          {"nominalCoverage", rs.nominal_coverage},
          {"mode", std::string(to_string(rs.mode))},
          {"reads", rs.reads.size()}};
}

inline void save_readset(const ReadSet& rs, const std::filesystem::path& fasta) {
  std::ofstream out(fasta, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + fasta.string());
  for (std::size_t i = 0; i < rs.reads.size(); ++i) out << ">r" << i << '\n' << rs.reads[i] << '\n';
  std::ofstream meta(fasta.string() + ".json", std::ios::binary);
  meta << readset_meta(rs).dump(1) << '\n';
  if (!out || !meta) throw Error(ErrorCode::io, "write failed for " + fasta.string());
}

inline ReadSet load_readset(const std::filesystem::path& fasta) {
  ReadSet rs;
  std::ifstream meta(fasta.string() + ".json", std::ios::binary);
  if (!meta) throw Error(ErrorCode::io, "cannot read " + fasta.string() + ".json");
  try {
    const auto j = nlohmann::json::parse(meta);
    rs.seed = j.at("seed").get<std::uint64_t>();
    rs.rates = {j.at("rates").at("sub").get<double>(), j.at("rates").at("ins").get<double>(),
                j.at("rates").at("del").get<double>()};
    rs.nominal_coverage = j.at("nominalCoverage").get<double>();
    rs.mode = sequencing_mode_from_string(j.at("mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("read set sidecar: ") + e.what());
  }
  std::ifstream in(fasta, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + fasta.string());
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      rs.reads.emplace_back();
      have_header = true;
      continue;
    }
    if (!have_header) throw Error(ErrorCode::parse, "sequence data before the first header", (long long)n);
    if (line.find_first_not_of("ACGT") != std::string::npos)
      throw Error(ErrorCode::parse, "non-ACGT character in read", (long long)n);
    rs.reads.back() += line;
  }
  return rs;
}

}  // namespace picdna
