#pragma once
#define PICDNA_POOL_HPP 1

// Oligo assembly, the multi-image pool, simulated PCR selection and the
// FASTA + sidecar persistence format.
//
// Oligo layout (272 nt), layer primers outermost:
//
//   L_k.left | I_i.left | data block (192) | I_i.right | L_k.right
//
// The block's rotating code starts from the last base of I_i.left.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "picdna/erasure.hpp"
#include "picdna/error.hpp"
#include "picdna/layered_codec.hpp"
#include "picdna/primers.hpp"
#include "picdna/transcoder.hpp"

namespace picdna {

inline constexpr std::size_t oligo_length = 4 * primer_length + block_nucleotides;
inline constexpr std::size_t block_offset = 2 * primer_length;

/// Ground truth for assertions only; never an input to reconstruction.
struct Provenance {
  std::size_t image = 0;
  std::size_t layer = 0;
  std::uint32_t block = 0;
  friend auto operator<=>(const Provenance&, const Provenance&) = default;
};

struct Oligo {
  std::string sequence;
  Provenance provenance;
  friend auto operator<=>(const Oligo&, const Oligo&) = default;
};

struct ManifestEntry {
  std::size_t image = 0;
  std::size_t layer = 0;
  std::size_t oligos = 0;       // data + parity
  std::size_t data_oligos = 0;
  std::size_t layer_bytes = 0;  // serialized container size
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ImageInfo {
  std::size_t id = 0;
  std::size_t width = 0, height = 0, channels = 0;
  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct CodecParams {
  int num_levels = 5;
  int q = 1;
  friend bool operator==(const CodecParams&, const CodecParams&) = default;
};

struct OligoPool {
  std::vector<Oligo> oligos;
  PrimerRegistry registry;
  std::vector<ManifestEntry> manifest;
  CodecParams codec;
  ParityConfig parity;
  std::vector<ImageInfo> images;

  const ManifestEntry* entry(std::size_t image, std::size_t layer) const {
    for (const auto& e : manifest)
      if (e.image == image && e.layer == layer) return &e;
    return nullptr;
  }
  const ImageInfo* image_info(std::size_t id) const {
    for (const auto& i : images)
      if (i.id == id) return &i;
    return nullptr;
  }
};

inline Oligo assemble_oligo(const PrimerPair& layer_pair, const PrimerPair& image_pair, const DataBlock& block) {
  Oligo o;
  o.sequence.reserve(oligo_length);
  o.sequence += layer_pair.left.sequence;
  o.sequence += image_pair.left.sequence;
  o.sequence += encode_block_nucleotides(block, image_pair.left.sequence.back());
  o.sequence += image_pair.right.sequence;
  o.sequence += layer_pair.right.sequence;
  o.provenance.block = block.index;
  return o;
}

/// Encodes every image and pools all oligos. `images` holds (id, image)
/// with id indexing registry.image_pairs.
inline OligoPool build_pool(const std::vector<std::pair<std::size_t, Image>>& images, int num_levels, int q,
                            const PrimerRegistry& registry, const ParityConfig& parity = {}) {
  parity.validate();
  if (num_levels < 2 || std::size_t(num_levels) > registry.layer_pairs.size())
    throw Error(ErrorCode::contract, "registry has fewer layer pairs than numLevels");
  OligoPool pool;
  pool.registry = registry;
  pool.codec = {num_levels, q};
  pool.parity = parity;
  for (const auto& [id, img] : images) {
    if (id >= registry.image_pairs.size())
      throw Error(ErrorCode::contract, "no image primer pair for image " + std::to_string(id), (long long)id);
    if (pool.image_info(id)) throw Error(ErrorCode::contract, "duplicate image id", (long long)id);
    pool.images.push_back({id, img.width, img.height, img.channels});
    const auto stream = encode_layers(img, num_levels, q);
    for (std::size_t k = 0; k < stream.layers.size(); ++k) {
      const auto bytes = serialize(stream.layers[k]);
      auto blocks = blocks_from_stream(bytes);
      const auto data_count = blocks.size();
      const auto extra = make_parity_blocks(blocks, parity);
      blocks.insert(blocks.end(), extra.begin(), extra.end());
      for (const auto& b : blocks) {
        auto o = assemble_oligo(registry.layer_pairs[k], registry.image_pairs[id], b);
        o.provenance.image = id;
        o.provenance.layer = k;
        pool.oligos.push_back(std::move(o));
      }
      pool.manifest.push_back({id, k, blocks.size(), data_count, bytes.size()});
    }
  }
  return pool;
}

// ---------------------------------------------------------------------------
// PCR selection

namespace detail {

inline bool window_matches(std::string_view window, const Primer& p, int tau) {
  if (window == p.sequence) return true;
  return tau > 0 && levenshtein(window, p.sequence) <= tau;
}

/// Pair present at the outer (layer) or inner (image) primer slots.
inline bool carries_pair(std::string_view seq, const PrimerPair& pair, int tau) {
  if (seq.size() < 4 * primer_length) return false;
  for (const std::size_t off : {std::size_t(0), primer_length}) {
    if (window_matches(seq.substr(off, primer_length), pair.left, tau) &&
        window_matches(seq.substr(seq.size() - off - primer_length, primer_length), pair.right, tau))
      return true;
  }
  return false;
}

inline void amplify(std::vector<Oligo>& out, const Oligo& o, std::size_t amplification) {
  for (std::size_t a = 0; a < amplification; ++a) out.push_back(o);
}

}  // namespace detail

/// Union over `pairs`: an oligo is selected if it carries any of them.
inline std::vector<Oligo> pcr_select(const OligoPool& pool, std::span<const PrimerPair> pairs, int tau,
                                     std::size_t amplification = 1) {
  if (tau < 0) throw Error(ErrorCode::contract, "tau must be >= 0");
  if (amplification < 1) throw Error(ErrorCode::contract, "amplification must be >= 1");
  std::vector<Oligo> out;
  for (const auto& o : pool.oligos)
    if (std::any_of(pairs.begin(), pairs.end(), [&](const PrimerPair& p) { return detail::carries_pair(o.sequence, p, tau); }))
      detail::amplify(out, o, amplification);
  return out;
}

inline std::vector<Oligo> pcr_select(const OligoPool& pool, const PrimerPair& pair, int tau, std::size_t amplification = 1) {
  return pcr_select(pool, std::span<const PrimerPair>(&pair, 1), tau, amplification);
}

/// Conjunction: an oligo is selected only if it carries every pair.
inline std::vector<Oligo> pcr_select_all(const OligoPool& pool, std::span<const PrimerPair> pairs, int tau,
                                         std::size_t amplification = 1) {
  if (tau < 0) throw Error(ErrorCode::contract, "tau must be >= 0");
  if (amplification < 1) throw Error(ErrorCode::contract, "amplification must be >= 1");
  std::vector<Oligo> out;
  for (const auto& o : pool.oligos)
    if (std::all_of(pairs.begin(), pairs.end(), [&](const PrimerPair& p) { return detail::carries_pair(o.sequence, p, tau); }))
      detail::amplify(out, o, amplification);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: <dir>/pool.fasta + <dir>/pool.meta.json

inline std::string oligo_header(const Provenance& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "img%zu_L%zu_b%05u", p.image, p.layer, unsigned(p.block));
  return buf;
}

inline Provenance parse_oligo_header(const std::string& header, std::size_t line) {
  Provenance p;
  unsigned block = 0;
  int consumed = 0;
  if (std::sscanf(header.c_str(), "img%zu_L%zu_b%u%n", &p.image, &p.layer, &block, &consumed) != 3 ||
      std::size_t(consumed) != header.size())
    throw Error(ErrorCode::parse, "bad oligo header '" + header + "'", (long long)line);
  p.block = block;
  return p;
}

struct FastaRecord {
  std::string header;
  std::string sequence;
  std::size_t line = 0;  // of the header
};

inline void write_fasta(std::ostream& out, const std::vector<FastaRecord>& records) {
  for (const auto& r : records) out << '>' << r.header << '\n' << r.sequence << '\n';
}

/// Reads '>' records; sequences may span lines. Errors carry the 1-based line.
inline std::vector<FastaRecord> read_fasta(std::istream& in) {
  std::vector<FastaRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      out.push_back({line.substr(1), {}, n});
      continue;
    }
    if (out.empty()) throw Error(ErrorCode::parse, "sequence data before the first header", (long long)n);
    if (line.find_first_not_of("ACGT") != std::string::npos)
      throw Error(ErrorCode::parse, "non-ACGT character in sequence", (long long)n);
    out.back().sequence += line;
  }
  return out;
}

inline nlohmann::json pool_meta_to_json(const OligoPool& pool) {
  nlohmann::json j;
  j["registry"] = registry_to_json(pool.registry);
  j["manifest"] = nlohmann::json::array();
  for (const auto& e : pool.manifest)
    j["manifest"].push_back({{"image", e.image}, {"layer", e.layer}, {"oligos", e.oligos},
                             {"dataOligos", e.data_oligos}, {"layerBytes", e.layer_bytes}});
  j["codec"] = {{"numLevels", pool.codec.num_levels}, {"q", pool.codec.q}};
  j["redundancy"] = {{"groupData", pool.parity.group_data}, {"groupParity", pool.parity.group_parity}};
  j["images"] = nlohmann::json::array();
  for (const auto& i : pool.images)
    j["images"].push_back({{"id", i.id}, {"width", i.width}, {"height", i.height}, {"channels", i.channels}});
  return j;
}

inline void pool_meta_from_json(const nlohmann::json& j, OligoPool& pool) {
  try {
    pool.registry = registry_from_json(j.at("registry"));
    pool.manifest.clear();
    for (const auto& e : j.at("manifest"))
      pool.manifest.push_back({e.at("image").get<std::size_t>(), e.at("layer").get<std::size_t>(),
                               e.at("oligos").get<std::size_t>(), e.value("dataOligos", e.at("oligos").get<std::size_t>()),
                               e.at("layerBytes").get<std::size_t>()});
    pool.codec = {j.at("codec").at("numLevels").get<int>(), j.at("codec").at("q").get<int>()};
    pool.parity = {0, 0};
    if (j.contains("redundancy"))
      pool.parity = {j["redundancy"].at("groupData").get<std::uint32_t>(), j["redundancy"].at("groupParity").get<std::uint32_t>()};
    pool.images.clear();
    if (j.contains("images"))
      for (const auto& i : j["images"])
        pool.images.push_back({i.at("id").get<std::size_t>(), i.at("width").get<std::size_t>(),
                               i.at("height").get<std::size_t>(), i.at("channels").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("pool sidecar: ") + e.what());
  }
}

inline void save_pool(const OligoPool& pool, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream fa(dir / "pool.fasta", std::ios::binary);
  if (!fa) throw Error(ErrorCode::io, "cannot write " + (dir / "pool.fasta").string());
  for (const auto& o : pool.oligos) fa << '>' << oligo_header(o.provenance) << '\n' << o.sequence << '\n';
  std::ofstream meta(dir / "pool.meta.json", std::ios::binary);
  if (!meta) throw Error(ErrorCode::io, "cannot write " + (dir / "pool.meta.json").string());
  meta << pool_meta_to_json(pool).dump(1) << '\n';
  if (!fa || !meta) throw Error(ErrorCode::io, "write failed for pool " + dir.string());
}

inline OligoPool load_pool(const std::filesystem::path& dir) {
  OligoPool pool;
  std::ifstream meta(dir / "pool.meta.json", std::ios::binary);
  if (!meta) throw Error(ErrorCode::io, "cannot read " + (dir / "pool.meta.json").string());
  const std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + std::ptrdiff_t(upto), '\n');
    throw Error(ErrorCode::parse, std::string("pool sidecar: ") + e.what(), line);
  }
  pool_meta_from_json(j, pool);

  std::ifstream fa(dir / "pool.fasta", std::ios::binary);
  if (!fa) throw Error(ErrorCode::io, "cannot read " + (dir / "pool.fasta").string());
  for (auto& r : read_fasta(fa)) {
    const auto prov = parse_oligo_header(r.header, r.line);
    if (r.sequence.size() != oligo_length)
      throw Error(ErrorCode::parse, "oligo " + r.header + " is not 272 nt", (long long)r.line);
    pool.oligos.push_back({std::move(r.sequence), prov});
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const auto& o : pool.oligos) ++counts[{o.provenance.image, o.provenance.layer}];
  for (const auto& e : pool.manifest)
    if (counts[{e.image, e.layer}] != e.oligos)
      throw Error(ErrorCode::structure, "manifest disagrees with FASTA for " + oligo_header({e.image, e.layer, 0}));
  return pool;
}

inline bool same_multiset(std::vector<Oligo> a, std::vector<Oligo> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace picdna
