#pragma once

// Progressive random-access decode of one image from a pool: per layer,
// PCR-select (layer pair AND image pair), sequence, reconstruct from the
// reads alone, then decode the codec layers. Layer k always uses the
// channel seed mix_seed(seed, k), so decoding to K and later to K' > K
// reproduces a direct decode to K' exactly while sequencing only the new
// layers.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "picdna/channel.hpp"
#include "picdna/costs.hpp"
#include "picdna/pool.hpp"
#include "picdna/reconstruct.hpp"

namespace picdna {

struct DecodeParams {
  double coverage = 5.0;
  std::vector<double> layer_coverage;  // optional per-layer override
  ErrorRates rates;
  std::uint64_t seed = 1;
  SequencingMode mode = SequencingMode::poisson;
  int tau = default_tau;

  double coverage_for(std::size_t k) const { return k < layer_coverage.size() ? layer_coverage[k] : coverage; }
};

struct LayerCost {
  std::size_t layer = 0;
  std::size_t oligos = 0;       // selected by PCR
  std::size_t reads = 0;
  std::size_t nucleotides = 0;  // actually sequenced
  double coverage = 0;
};

/// Costs of what was actually sequenced, plus the model gains for the same
/// coverages computed by the costs module from the pool manifest.
struct DecodeCost {
  std::vector<LayerCost> layers;  // cumulative history, layer order
  std::size_t cumulative_nucleotides = 0;
  double pixels = 0;
  double read_cost() const { return pixels > 0 ? double(cumulative_nucleotides) / pixels : 0.0; }
  Gains gains;
};

inline nlohmann::json to_json(const LayerCost& c) {
  return {{"layer", c.layer}, {"oligos", c.oligos}, {"reads", c.reads}, {"nucleotides", c.nucleotides}, {"coverage", c.coverage}};
}

inline nlohmann::json to_json(const LayerTrace& t) {
  return {{"layer", t.layer},
          {"oligosSelected", t.oligos_selected},
          {"readsSeen", t.reads_seen},
          {"clustersFormed", t.clusters_formed},
          {"consensusFailures", t.consensus_failures},
          {"blocksRecovered", t.blocks_recovered},
          {"rescued", t.rescued},
          {"parityRepaired", t.parity_repaired},
          {"dataBlocks", t.data_blocks},
          {"bytesRecovered", t.bytes_recovered}};
}

inline nlohmann::json to_json(const DecodeCost& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : c.layers) layers.push_back(to_json(l));
  return {{"layers", layers},
          {"cumulativeNucleotides", c.cumulative_nucleotides},
          {"cumulativeReadCost", c.read_cost()},
          {"gains", {{"gpd", c.gains.gpd}, {"gra", c.gains.gra}}}};
}

/// Model inputs from a pool manifest: oligo counts per (image, layer) with
/// the given per-layer coverage; pixels of the target image.
inline CostInputs cost_inputs_from_pool(const OligoPool& pool, std::size_t target_image,
                                        const std::vector<double>& coverage) {
  CostInputs in;
  in.n_levels = std::size_t(pool.codec.num_levels);
  in.coverage = coverage;
  in.coverage.resize(in.n_levels, coverage.empty() ? 1.0 : coverage.back());
  std::size_t target_row = 0;
  bool found = false;
  for (const auto& img : pool.images) {
    if (img.id == target_image) {
      target_row = in.oligo_count.size();
      found = true;
      in.input_pixels = double(img.width * img.height);
    }
    std::vector<double> row(in.n_levels, 0.0);
    for (std::size_t k = 0; k < in.n_levels; ++k)
      if (const auto* e = pool.entry(img.id, k)) row[k] = double(e->oligos);
    in.oligo_count.push_back(std::move(row));
  }
  if (!found) throw Error(ErrorCode::contract, "image " + std::to_string(target_image) + " not in pool", (long long)target_image);
  in.n_images = in.oligo_count.size();
  // Callers index the target through row 0.
  std::swap(in.oligo_count[0], in.oligo_count[target_row]);
  return in;
}

inline std::size_t image_id_for_pair(const PrimerRegistry& registry, const PrimerPair& pair) {
  for (std::size_t i = 0; i < registry.image_pairs.size(); ++i)
    if (registry.image_pairs[i] == pair) return i;
  throw Error(ErrorCode::unidentified_primer, "image primer pair not in registry");
}

class ProgressiveDecoder {
 public:
  ProgressiveDecoder(const OligoPool& pool, std::size_t image_id, DecodeParams params)
      : pool_(&pool), image_(image_id), params_(std::move(params)) {
    const auto* info = pool.image_info(image_id);
    if (!info) throw Error(ErrorCode::contract, "image " + std::to_string(image_id) + " not in pool", (long long)image_id);
    cost_.pixels = double(info->width * info->height);
  }

  int num_levels() const { return pool_->codec.num_levels; }
  /// Highest level whose layers 0..K are all recovered; -1 if none.
  int decoded_level() const { return int(containers_.size()) - 1; }
  const DecodeCost& cost() const { return cost_; }
  const std::vector<LayerTrace>& trace() const { return trace_; }
  const DecodeParams& params() const { return params_; }
  std::size_t image_id() const { return image_; }

  /// Sequences and recovers layers decoded_level()+1 .. k. Returns the newly
  /// sequenced layer costs. On failure throws with detail = failing layer;
  /// layers recovered before it stay cached.
  std::vector<LayerCost> advance(int k) {
    if (k < 0 || k >= num_levels()) throw Error(ErrorCode::contract, "target level outside [0, D]", k);
    std::vector<LayerCost> fresh;
    const auto& reg = pool_->registry;
    for (int layer = decoded_level() + 1; layer <= k; ++layer) {
      const auto lk = std::size_t(layer);
      const PrimerPair pairs[2] = {reg.layer_pairs.at(lk), reg.image_pairs.at(image_)};
      const auto selection = pcr_select_all(*pool_, pairs, params_.tau);
      const double cov = params_.coverage_for(lk);
      const auto reads = sequence(selection, cov, params_.rates, mix_seed(params_.seed, lk), params_.mode);

      LayerCost lc{lk, selection.size(), reads.reads.size(), reads.nucleotides(), cov};
      cost_.layers.push_back(lc);
      cost_.cumulative_nucleotides += lc.nucleotides;
      fresh.push_back(lc);

      ReconstructOptions opt;
      opt.tau = params_.tau;
      opt.only_layer = lk;
      auto rec = reconstruct_reads(reads, reg, opt);
      RecoveredLayer empty;
      empty.trace.image = image_;
      empty.trace.layer = lk;
      auto it = rec.layers.find({image_, lk});
      RecoveredLayer& got = it == rec.layers.end() ? empty : it->second;
      got.trace.oligos_selected = selection.size();
      try {
        if (got.blocks.empty()) throw Error(ErrorCode::gap, "no blocks recovered", 0);
        containers_.push_back(recover_layer_container(got));
        trace_.push_back(got.trace);
      } catch (const Error& e) {
        trace_.push_back(got.trace);
        update_gains();
        throw Error(e.code(), "layer " + std::to_string(layer) + " unrecoverable (" + e.what() + ")", layer);
      }
    }
    update_gains();
    return fresh;
  }

  /// Image at the highest decoded level (throws if nothing decoded yet).
  Image image() const { return image_at(decoded_level()); }

  Image image_at(int k) const {
    if (k < 0 || k > decoded_level()) throw Error(ErrorCode::incomplete_layer, "level not decoded", k);
    return decode_layers(std::span<const LayerContainer>(containers_.data(), std::size_t(k) + 1), k);
  }

 private:
  void update_gains() {
    const int k = std::max(decoded_level(), 0);
    std::vector<double> cov;
    for (int layer = 0; layer < num_levels(); ++layer) cov.push_back(params_.coverage_for(std::size_t(layer)));
    const auto in = cost_inputs_from_pool(*pool_, image_, cov);
    try {
      cost_.gains = gains(in, 0, std::size_t(k));
    } catch (const Error&) {
      cost_.gains = {};  // zero coverage: no meaningful gain
    }
  }

  const OligoPool* pool_;
  std::size_t image_;
  DecodeParams params_;
  std::vector<LayerContainer> containers_;
  std::vector<LayerTrace> trace_;
  DecodeCost cost_;
};

struct DecodeOutcome {
  Image image;
  DecodeCost cost;
  std::vector<LayerTrace> trace;
};

inline DecodeOutcome decode_image(const OligoPool& pool, std::size_t image_id, int k, const DecodeParams& params) {
  ProgressiveDecoder dec(pool, image_id, params);
  dec.advance(k);
  return {dec.image(), dec.cost(), dec.trace()};
}

inline DecodeOutcome decode_image(const OligoPool& pool, const PrimerPair& image_pair, int k, const DecodeParams& params) {
  return decode_image(pool, image_id_for_pair(pool.registry, image_pair), k, params);
}

inline nlohmann::json trace_json(const std::vector<LayerTrace>& trace) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : trace) j.push_back(to_json(t));
  return j;
}

/// Reference reconstruction straight from the pool's noise-free oligos
/// (ground truth for evaluation; not a decode path).
inline Image reference_decode(const OligoPool& pool, std::size_t image_id, int k) {
  std::map<std::size_t, std::vector<DataBlock>> by_layer;
  const char prev = rotation_seed(pool.registry, image_id);
  for (const auto& o : pool.oligos)
    if (o.provenance.image == image_id && !is_parity_index(o.provenance.block) && int(o.provenance.layer) <= k)
      by_layer[o.provenance.layer].push_back(
          decode_block_nucleotides(std::string_view(o.sequence).substr(block_offset, block_nucleotides), prev));
  std::vector<LayerContainer> layers;
  for (auto& [layer, blocks] : by_layer) layers.push_back(parse_container(stream_from_blocks(std::move(blocks))));
  return decode_layers(layers, k);
}

// ---------------------------------------------------------------------------
// Coverage sweep

struct SweepRow {
  double coverage = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate() const { return trials ? double(successes) / double(trials) : 0.0; }
};

/// A trial succeeds when decoding to K completes and equals the noise-free
/// reference reconstruction.
inline std::vector<SweepRow> coverage_sweep(const OligoPool& pool, std::size_t image_id, int k, const ErrorRates& rates,
                                            const std::vector<double>& coverages, std::size_t seed_count,
                                            std::uint64_t base_seed = 1,
                                            SequencingMode mode = SequencingMode::poisson) {
  if (coverages.empty()) throw Error(ErrorCode::contract, "coverage list is empty");
  const auto reference = reference_decode(pool, image_id, k);
  // Cells (coverage, seed) are independent; workers pull them off a shared
  // counter and only per-cell outcomes are combined, so order never matters.
  const std::size_t n_cells = coverages.size() * seed_count;
  std::vector<char> success(n_cells, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n_cells;) {
      DecodeParams p;
      p.coverage = coverages[i / seed_count];
      p.rates = rates;
      p.seed = mix_seed(base_seed, i % seed_count);
      p.mode = mode;
      try {
        success[i] = p.coverage > 0 && decode_image(pool, image_id, k, p).image == reference;
      } catch (const Error&) {
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n_cells, 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  std::vector<SweepRow> rows;
  std::size_t cell = 0;
  for (const double c : coverages) {
    SweepRow row{c, seed_count, 0};
    for (std::size_t s = 0; s < seed_count; ++s) row.successes += success[cell++] ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace picdna
