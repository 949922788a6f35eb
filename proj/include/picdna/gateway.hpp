#pragma once

// Service session behind the HTTP API: one loaded pool, a thumbnail cache
// built once, and a progressive decoder per image so that later requests
// only sequence the layers they add.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "picdna/costs.hpp"
#include "picdna/decode.hpp"
#include "picdna/image.hpp"
#include "picdna/pool.hpp"
#include "picdna/reconstruct.hpp"

namespace picdna {

struct SessionConfig {
  DecodeParams decode;           // defaults for decode requests
  double thumbnail_coverage = 5.0;
  std::uint64_t thumbnail_seed = 1;
};

struct ImageEntry {
  std::size_t image_id = 0;
  std::size_t primer_pair_id = 0;
  bool decodable = true;
  std::string error;
};

struct DecodeRequest {
  int target_level = 0;
  std::optional<double> coverage;
  std::optional<ErrorRates> rates;
  std::optional<std::uint64_t> seed;
};

struct DecodeResponse {
  std::size_t image_id = 0;
  int level = 0;
  double psnr = 0;                     // against the full-level reference; inf when identical
  std::vector<LayerCost> layer_costs;  // layers sequenced by this request only
  DecodeCost cost;                     // cumulative for the image in this session
};

inline std::string image_url(std::size_t id, int level) {
  return "/api/images/" + std::to_string(id) + "/image.bmp?level=" + std::to_string(level);
}

inline nlohmann::json to_json(const DecodeResponse& r) {
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& c : r.layer_costs) costs.push_back(to_json(c));
  return {{"imageId", r.image_id},
          {"level", r.level},
          {"imageUrl", image_url(r.image_id, r.level)},
          // JSON has no infinity; an identical image reports null.
          {"psnr", std::isfinite(r.psnr) ? nlohmann::json(r.psnr) : nlohmann::json()},
          {"identical", !std::isfinite(r.psnr)},
          {"layerCosts", costs},
          {"cumulativeNucleotides", r.cost.cumulative_nucleotides},
          {"cumulativeReadCost", r.cost.read_cost()},
          {"gains", {{"gpd", r.cost.gains.gpd}, {"gra", r.cost.gains.gra}}}};
}

class Session {
 public:
  explicit Session(OligoPool pool, SessionConfig config = {}) : pool_(std::move(pool)), config_(std::move(config)) {
    for (const auto& img : pool_.images) slots_.emplace(img.id, std::make_unique<Slot>());
  }

  const OligoPool& pool() const { return pool_; }
  const SessionConfig& config() const { return config_; }

  /// Thumbnail extraction runs once per session.
  std::vector<ImageEntry> images() {
    ensure_thumbnails();
    std::vector<ImageEntry> out;
    for (const auto& t : thumbs_->thumbnails) out.push_back({t.image_id, image_id_for_pair(pool_.registry, t.pair), true, {}});
    for (const auto& u : thumbs_->undecodable) out.push_back({u.image_id, u.image_id, false, u.message});
    std::sort(out.begin(), out.end(), [](const ImageEntry& a, const ImageEntry& b) { return a.image_id < b.image_id; });
    return out;
  }

  Image thumbnail(std::size_t id) {
    require_image(id);
    ensure_thumbnails();
    for (const auto& t : thumbs_->thumbnails)
      if (t.image_id == id) return t.image;
    for (const auto& u : thumbs_->undecodable)
      if (u.image_id == id) throw Error(u.code, u.message, (long long)id);
    throw Error(ErrorCode::gap, "no thumbnail for image " + std::to_string(id), (long long)id);
  }

  /// Decodes image `id` up to the requested level. Changing the channel
  /// parameters discards the image's cached layers.
  DecodeResponse decode(std::size_t id, const DecodeRequest& req) {
    auto& slot = slot_for(id);
    std::lock_guard lock(slot.mutex);
    auto params = config_.decode;
    if (req.coverage) params.coverage = *req.coverage;
    if (req.rates) params.rates = *req.rates;
    if (req.seed) params.seed = *req.seed;
    if (!slot.decoder || !same_channel(slot.decoder->params(), params))
      slot.decoder = std::make_unique<ProgressiveDecoder>(pool_, id, params);
    if (!slot.reference) slot.reference = reference_decode(pool_, id, pool_.codec.num_levels - 1);

    DecodeResponse r;
    r.image_id = id;
    r.layer_costs = slot.decoder->advance(req.target_level);
    r.level = std::max(req.target_level, 0);
    const auto img = slot.decoder->image_at(r.level);
    const auto full = upsample_bicubic(img, slot.reference->width, slot.reference->height);
    r.psnr = psnr(full, *slot.reference);
    r.cost = slot.decoder->cost();
    return r;
  }

  /// Previously decoded level, upsampled to full size for display.
  Image decoded_image(std::size_t id, int level) {
    auto& slot = slot_for(id);
    std::lock_guard lock(slot.mutex);
    if (!slot.decoder || level < 0 || level > slot.decoder->decoded_level())
      throw Error(ErrorCode::incomplete_layer, "level " + std::to_string(level) + " of image " + std::to_string(id) +
                                                   " has not been decoded",
                  level);
    const auto* info = pool_.image_info(id);
    return upsample_bicubic(slot.decoder->image_at(level), info->width, info->height);
  }

  /// Model costs per image at the session's default coverage, plus what
  /// each image has actually cost so far.
  nlohmann::json cost_report_json() {
    nlohmann::json images = nlohmann::json::array();
    std::vector<double> cov;
    for (int k = 0; k < pool_.codec.num_levels; ++k) cov.push_back(config_.decode.coverage_for(std::size_t(k)));
    for (const auto& img : pool_.images) {
      auto entry = to_json(cost_report(cost_inputs_from_pool(pool_, img.id, cov), 0));
      entry["imageId"] = img.id;
      auto& slot = *slots_.at(img.id);
      std::lock_guard lock(slot.mutex);
      if (slot.decoder) entry["session"] = to_json(slot.decoder->cost());
      images.push_back(std::move(entry));
    }
    return {{"coverage", cov}, {"oligoLength", oligo_length}, {"images", images}};
  }

 private:
  struct Slot {
    std::mutex mutex;
    std::unique_ptr<ProgressiveDecoder> decoder;
    std::optional<Image> reference;
  };

  static bool same_channel(const DecodeParams& a, const DecodeParams& b) {
    return a.coverage == b.coverage && a.layer_coverage == b.layer_coverage && a.rates == b.rates && a.seed == b.seed &&
           a.mode == b.mode && a.tau == b.tau;
  }

  void require_image(std::size_t id) const {
    if (!pool_.image_info(id)) throw Error(ErrorCode::contract, "unknown image " + std::to_string(id), (long long)id);
  }

  Slot& slot_for(std::size_t id) {
    require_image(id);
    return *slots_.at(id);
  }

  void ensure_thumbnails() {
    std::lock_guard lock(thumb_mutex_);
    if (thumbs_) return;
    const auto sel = pcr_select(pool_, pool_.registry.layer_pairs.at(0), config_.decode.tau);
    const auto reads =
        sequence(sel, config_.thumbnail_coverage, config_.decode.rates, config_.thumbnail_seed, config_.decode.mode);
    std::vector<std::size_t> expected;
    for (const auto& img : pool_.images) expected.push_back(img.id);
    thumbs_ = extract_thumbnails(reads, pool_.registry, config_.decode.tau, expected);
  }

  OligoPool pool_;
  SessionConfig config_;
  std::map<std::size_t, std::unique_ptr<Slot>> slots_;
  std::mutex thumb_mutex_;
  std::optional<ThumbnailExtraction> thumbs_;
};

// ---------------------------------------------------------------------------
// HTTP routes

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse:
    case ErrorCode::usage:
    case ErrorCode::contract: return 400;
    case ErrorCode::incomplete_layer: return 409;
    case ErrorCode::io: return 500;
    default: return 422;
  }
}

inline void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                       long long detail = -1) {
  nlohmann::json j{{"code", code}, {"message", message}};
  if (detail >= 0) j["detail"] = detail;
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

inline DecodeRequest parse_decode_request(const std::string& body) {
  DecodeRequest r;
  if (body.empty()) return r;
  try {
    const auto j = nlohmann::json::parse(body);
    r.target_level = j.value("targetLevel", 0);
    if (j.contains("coverage")) r.coverage = j.at("coverage").get<double>();
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("rates")) {
      const auto& jr = j.at("rates");
      ErrorRates rates;
      rates.sub = jr.value("sub", rates.sub);
      rates.ins = jr.value("ins", rates.ins);
      rates.del = jr.value("del", rates.del);
      r.rates = rates;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("decode request: ") + e.what());
  }
  return r;
}

inline void install_routes(httplib::Server& server, Session& session) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  // Every handler maps library errors onto {code, message}; unknown images are 404.
  auto guarded = [&session](auto handler) {
    return [&session, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        const bool unknown = e.code() == ErrorCode::contract && std::string(e.what()).find("unknown image") != std::string::npos;
        send_error(res, unknown ? 404 : http_status(e.code()), to_string(e.code()), e.what(), e.detail());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  };
  auto image_id = [](const httplib::Request& req) { return std::size_t(std::stoull(req.matches[1])); };

  server.Get("/api/images", guarded([&session](const httplib::Request&, httplib::Response& res) {
               nlohmann::json j = nlohmann::json::array();
               for (const auto& e : session.images()) {
                 nlohmann::json item{{"imageId", e.image_id},
                                     {"thumbnailUrl", "/api/images/" + std::to_string(e.image_id) + "/thumbnail.bmp"},
                                     {"primerPairId", e.primer_pair_id},
                                     {"decodable", e.decodable}};
                 if (!e.decodable) item["error"] = e.error;
                 j.push_back(std::move(item));
               }
               res.set_content(j.dump(), "application/json");
             }));
  server.Get(R"(/api/images/(\d+)/thumbnail\.bmp)", guarded([&](const httplib::Request& req, httplib::Response& res) {
               res.set_content(encode_bmp(session.thumbnail(image_id(req))), "image/bmp");
             }));
  server.Post(R"(/api/images/(\d+)/decode)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto r = session.decode(image_id(req), parse_decode_request(req.body));
                res.set_content(to_json(r).dump(), "application/json");
              }));
  server.Get(R"(/api/images/(\d+)/image\.bmp)", guarded([&](const httplib::Request& req, httplib::Response& res) {
               if (!req.has_param("level")) throw Error(ErrorCode::usage, "missing level parameter");
               int level = 0;
               try {
                 level = std::stoi(req.get_param_value("level"));
               } catch (const std::exception&) {
                 throw Error(ErrorCode::usage, "level must be an integer");
               }
               res.set_content(encode_bmp(session.decoded_image(image_id(req), level)), "image/bmp");
             }));
  server.Get("/api/cost-report", guarded([&session](const httplib::Request&, httplib::Response& res) {
               res.set_content(session.cost_report_json().dump(), "application/json");
             }));
}

}  // namespace picdna
