#pragma once

// Read-cost and gain model. nucs(i, k) = coverage(k) * oligos(i, k) *
// oligoLength; Rc sums every layer of every image, RcPd stops at level K,
// RcRa pays all thumbnails plus levels 1..K of the target image only.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "picdna/error.hpp"

namespace picdna {

inline constexpr double default_oligo_length = 272.0;

struct CostInputs {
  std::size_t n_images = 0;
  std::size_t n_levels = 0;
  std::vector<std::vector<double>> oligo_count;  // [image][layer], per-layer (not cumulative)
  double oligo_length = default_oligo_length;
  std::vector<double> coverage;                  // per layer
  double input_pixels = 1.0;

  void validate() const {
    if (oligo_count.size() != n_images) throw Error(ErrorCode::contract, "oligo_count must have one row per image");
    for (const auto& row : oligo_count) {
      if (row.size() != n_levels) throw Error(ErrorCode::contract, "oligo_count rows must have one entry per level");
      for (const double c : row)
        if (!(c >= 0.0)) throw Error(ErrorCode::contract, "oligo counts must be >= 0");
    }
    if (coverage.size() != n_levels) throw Error(ErrorCode::contract, "coverage vector length must equal nLevels");
    for (const double c : coverage)
      if (!(c >= 0.0)) throw Error(ErrorCode::contract, "coverage must be >= 0");
    if (!(oligo_length > 0.0)) throw Error(ErrorCode::contract, "oligo length must be > 0");
  }
};

inline double nucs(const CostInputs& in, std::size_t i, std::size_t k) {
  if (i >= in.n_images || k >= in.n_levels || i >= in.oligo_count.size() || k >= in.oligo_count[i].size() ||
      k >= in.coverage.size())
    throw Error(ErrorCode::contract, "nucs index out of range");
  return in.coverage[k] * in.oligo_count[i][k] * in.oligo_length;
}

struct ReadCosts {
  double rc = 0, rc_pd = 0, rc_ra = 0;  // nucleotides per pixel
};

inline ReadCosts read_cost_variants(const CostInputs& in, std::size_t target, std::size_t k_target) {
  in.validate();
  if (target >= in.n_images || k_target >= in.n_levels) throw Error(ErrorCode::contract, "I or K out of range");
  if (!(in.input_pixels > 0.0)) throw Error(ErrorCode::contract, "inputPixels must be > 0");
  double all = 0, pd = 0, ra = 0;
  for (std::size_t i = 0; i < in.n_images; ++i)
    for (std::size_t k = 0; k < in.n_levels; ++k) {
      const double n = nucs(in, i, k);
      all += n;
      if (k <= k_target) pd += n;
      if (k == 0) ra += n;
    }
  for (std::size_t k = 1; k <= k_target; ++k) ra += nucs(in, target, k);
  return {all / in.input_pixels, pd / in.input_pixels, ra / in.input_pixels};
}

struct Gains {
  double gpd = 0, gra = 0;
};

inline Gains gains(const CostInputs& in, std::size_t target, std::size_t k_target) {
  const auto rc = read_cost_variants(in, target, k_target);
  if (!(rc.rc_pd > 0.0) || !(rc.rc_ra > 0.0)) throw Error(ErrorCode::contract, "zero read cost in gain denominator");
  return {rc.rc / rc.rc_pd, rc.rc / rc.rc_ra};
}

// ---------------------------------------------------------------------------
// Reports

struct CostReport {
  std::size_t target = 0;
  std::vector<double> cumulative_pd_nucleotides;  // through level K, all images
  std::vector<double> cumulative_ra_nucleotides;  // thumbnails + target's levels 1..K
  double rc = 0;
  std::vector<double> rc_pd, rc_ra, gpd, gra;
};

inline CostReport cost_report(const CostInputs& in, std::size_t target) {
  CostReport r;
  r.target = target;
  for (std::size_t k = 0; k < in.n_levels; ++k) {
    const auto rc = read_cost_variants(in, target, k);
    const auto g = gains(in, target, k);
    r.rc = rc.rc;
    r.rc_pd.push_back(rc.rc_pd);
    r.rc_ra.push_back(rc.rc_ra);
    r.cumulative_pd_nucleotides.push_back(rc.rc_pd * in.input_pixels);
    r.cumulative_ra_nucleotides.push_back(rc.rc_ra * in.input_pixels);
    r.gpd.push_back(g.gpd);
    r.gra.push_back(g.gra);
  }
  return r;
}

inline nlohmann::json to_json(const CostReport& r) {
  return {{"target", r.target},         {"rc", r.rc},   {"rcPd", r.rc_pd},
          {"rcRa", r.rc_ra},            {"gpd", r.gpd}, {"gra", r.gra},
          {"cumulativePdNucleotides", r.cumulative_pd_nucleotides},
          {"cumulativeRaNucleotides", r.cumulative_ra_nucleotides}};
}

/// Three significant digits, the precision Table 1 is printed with.
inline std::string sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Aligned text mirroring Table 1: one block for progressive decoding, one
/// for random access, columns L0..L{n-1}. Oligo rows are cumulative.
struct Table1Rows {
  std::vector<double> pd_oligos, ra_oligos, coverage, gpd, gra;
};

inline std::string format_table1(const Table1Rows& t, const std::string& title = "read-cost gains") {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::vector<double>& v, bool integer) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-22s", name.c_str());
    os << buf;
    for (const double x : v) {
      if (integer) std::snprintf(buf, sizeof buf, "%12.0f", x);
      else std::snprintf(buf, sizeof buf, "%12s", sig3(x).c_str());
      os << buf;
    }
    os << '\n';
  };
  os << title << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-22s", "Layer");
  os << buf;
  for (std::size_t k = 0; k < t.gpd.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%12s", ("L" + std::to_string(k)).c_str());
    os << buf;
  }
  os << "\n[progressive decoding]\n";
  row("# Oligos (cumulative)", t.pd_oligos, true);
  row("Coverage", t.coverage, false);
  row("Gpd", t.gpd, false);
  os << "[random access + progressive decoding]\n";
  row("# Oligos (cumulative)", t.ra_oligos, true);
  row("Coverage", t.coverage, false);
  row("Gra", t.gra, false);
  return os.str();
}

/// Cost inputs reproducing Table 1 from its cumulative oligo rows. The pool
/// is split into the target image and "the rest"; the thumbnail total sits
/// with the target (Eq. 3 sums thumbnails over every image, so the split is
/// immaterial).
inline CostInputs table1_inputs(const std::vector<double>& pool_cumulative, const std::vector<double>& ra_cumulative,
                                const std::vector<double>& coverage) {
  const std::size_t n = pool_cumulative.size();
  if (ra_cumulative.size() != n || coverage.size() != n || n == 0)
    throw Error(ErrorCode::contract, "Table 1 rows must have equal, nonzero length");
  if (pool_cumulative[0] != ra_cumulative[0])
    throw Error(ErrorCode::contract, "both Table 1 rows must start with the same thumbnail count");
  CostInputs in;
  in.n_images = 2;
  in.n_levels = n;
  in.coverage = coverage;
  in.oligo_count.assign(2, std::vector<double>(n, 0.0));
  in.oligo_count[0][0] = pool_cumulative[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double target = ra_cumulative[k] - ra_cumulative[k - 1];
    const double pool = pool_cumulative[k] - pool_cumulative[k - 1];
    if (target < 0 || pool < target) throw Error(ErrorCode::contract, "Table 1 rows are not cumulative counts");
    in.oligo_count[0][k] = target;
    in.oligo_count[1][k] = pool - target;
  }
  return in;
}

inline Table1Rows table1_rows(const std::vector<double>& pool_cumulative, const std::vector<double>& ra_cumulative,
                              const std::vector<double>& coverage) {
  const auto in = table1_inputs(pool_cumulative, ra_cumulative, coverage);
  const auto r = cost_report(in, 0);
  return {pool_cumulative, ra_cumulative, coverage, r.gpd, r.gra};
}

/// CSV of (readCost, PSNR) points for rate-distortion style plots.
inline std::string rate_distortion_csv(const std::vector<std::pair<double, double>>& points) {
  std::ostringstream os;
  os << "readCost,psnr\n";
  for (const auto& [cost, psnr] : points) os << cost << ',' << (std::isinf(psnr) ? std::string("inf") : std::to_string(psnr)) << '\n';
  return os.str();
}

/// Equal to three significant digits, as a printed table would show it.
inline bool same_to_3_sig(double computed, double published) { return sig3(computed) == sig3(published); }

inline bool within_relative(double computed, double published, double tol) {
  return std::abs(computed - published) <= tol * std::abs(published);
}

}  // namespace picdna
