// picdna: encode images into an oligo pool, then simulate sequencing and
// decode thumbnails or single images from it.
//
// Options may also come from PICDNA_<OPTION> environment variables; flags win.
// Failures print one line "picdna: error code=<code> detail=<n> message=<text>"
// to stderr. Usage errors exit 2, everything else 1.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "picdna/costs.hpp"
#include "picdna/decode.hpp"
#include "picdna/gateway.hpp"
#include "picdna/image.hpp"
#include "picdna/pool.hpp"
#include "picdna/reconstruct.hpp"

namespace fs = std::filesystem;
using namespace picdna;

namespace {

struct ChannelOpts {
  double coverage = 5.0;
  double sub = ErrorRates{}.sub, ins = ErrorRates{}.ins, del = ErrorRates{}.del;
  std::uint64_t seed = 1;
  std::string mode = "poisson";
  int tau = default_tau;

  DecodeParams params() const {
    DecodeParams p;
    p.coverage = coverage;
    p.rates = {sub, ins, del};
    p.seed = seed;
    p.mode = sequencing_mode_from_string(mode);
    p.tau = tau;
    return p;
  }
};

void add_channel(CLI::App* cmd, ChannelOpts& o) {
  cmd->add_option("--coverage", o.coverage, "mean reads per oligo")->envname("PICDNA_COVERAGE")->capture_default_str();
  cmd->add_option("--sub", o.sub, "substitution rate per base")->envname("PICDNA_SUB")->capture_default_str();
  cmd->add_option("--ins", o.ins, "insertion rate per base")->envname("PICDNA_INS")->capture_default_str();
  cmd->add_option("--del", o.del, "deletion rate per base")->envname("PICDNA_DEL")->capture_default_str();
  cmd->add_option("--seed", o.seed, "channel seed")->envname("PICDNA_SEED")->capture_default_str();
  cmd->add_option("--mode", o.mode, "poisson or exact coverage")
      ->envname("PICDNA_MODE")
      ->check(CLI::IsMember({"poisson", "exact"}))
      ->capture_default_str();
  cmd->add_option("--tau", o.tau, "primer edit tolerance")->envname("PICDNA_TAU")->capture_default_str();
}

std::vector<fs::path> image_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::io, "no .pgm/.ppm images in " + dir.string());
  return files;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
}

std::vector<double> parse_coverages(const std::string& spec) {
  std::vector<double> out;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, dots)), hi = std::stoi(spec.substr(dots + 2));
    for (int c = lo; c <= hi; ++c) out.push_back(c);
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  }
  if (out.empty()) throw Error(ErrorCode::usage, "empty coverage list");
  return out;
}

httplib::Server* running_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"progressive image storage in simulated DNA"};
  app.require_subcommand(1);

  // encode
  fs::path enc_in, enc_out;
  int enc_levels = 5, enc_q = 1;
  std::uint64_t enc_seed = 42;
  std::uint32_t group_data = ParityConfig{}.group_data, group_parity = ParityConfig{}.group_parity;
  auto* encode = app.add_subcommand("encode", "encode a directory of PGM/PPM images into a pool");
  encode->add_option("--input", enc_in, "directory of .pgm/.ppm images")->required()->envname("PICDNA_INPUT")->check(CLI::ExistingDirectory);
  encode->add_option("--levels", enc_levels, "resolution levels")->envname("PICDNA_LEVELS")->capture_default_str();
  encode->add_option("--quality", enc_q, "quantizer step (1 = lossless)")->envname("PICDNA_QUALITY")->capture_default_str();
  encode->add_option("--seed", enc_seed, "primer registry seed")->envname("PICDNA_REGISTRY_SEED")->capture_default_str();
  encode->add_option("--parity-data", group_data, "data blocks per parity group")->capture_default_str();
  encode->add_option("--parity", group_parity, "parity blocks per group (0 disables)")->capture_default_str();
  encode->add_option("--out", enc_out, "pool directory")->required()->envname("PICDNA_POOL_OUT");

  // thumbnails
  fs::path th_pool, th_out;
  ChannelOpts th_ch;
  auto* thumbs = app.add_subcommand("thumbnails", "sequence every thumbnail and decode them");
  thumbs->add_option("--pool", th_pool, "pool directory")->required()->envname("PICDNA_POOL")->check(CLI::ExistingDirectory);
  thumbs->add_option("--out", th_out, "output directory")->required();
  add_channel(thumbs, th_ch);

  // decode
  fs::path de_pool, de_out, de_trace;
  std::size_t de_image = 0;
  int de_level = 0;
  ChannelOpts de_ch;
  auto* decode = app.add_subcommand("decode", "random-access decode of one image to a level");
  decode->add_option("--pool", de_pool, "pool directory")->required()->envname("PICDNA_POOL")->check(CLI::ExistingDirectory);
  decode->add_option("--image", de_image, "image id")->required();
  decode->add_option("--level", de_level, "target level K")->required();
  decode->add_option("--out", de_out, "output PGM/PPM")->required();
  decode->add_option("--trace", de_trace, "per-layer trace and cost JSON");
  add_channel(decode, de_ch);

  // cost
  fs::path co_pool, co_check;
  std::size_t co_image = 0;
  double co_coverage = 1.0;
  auto* cost = app.add_subcommand("cost", "read-cost report, or check gains against a reference table");
  cost->add_option("--pool", co_pool, "pool directory")->envname("PICDNA_POOL")->check(CLI::ExistingDirectory);
  cost->add_option("--image", co_image, "target image")->capture_default_str();
  cost->add_option("--coverage", co_coverage, "uniform coverage")->capture_default_str();
  cost->add_option("--table1-check", co_check, "JSON with cumulative counts, coverage and expected gains")
      ->check(CLI::ExistingFile);

  // sweep
  fs::path sw_pool;
  std::size_t sw_image = 0, sw_seeds = 10;
  int sw_level = -1;
  std::string sw_cov = "1..8";
  ChannelOpts sw_ch;
  auto* sweep = app.add_subcommand("sweep", "decode success rate across coverages");
  sweep->add_option("--pool", sw_pool, "pool directory")->required()->envname("PICDNA_POOL")->check(CLI::ExistingDirectory);
  sweep->add_option("--image", sw_image, "image id")->capture_default_str();
  sweep->add_option("--level", sw_level, "target level (default: full)");
  sweep->add_option("--coverages", sw_cov, "a..b or comma list")->capture_default_str();
  sweep->add_option("--seeds", sw_seeds, "trials per coverage")->capture_default_str();
  add_channel(sweep, sw_ch);

  // serve
  fs::path se_pool;
  int se_port = 8080;
  std::string se_host = "127.0.0.1";
  ChannelOpts se_ch;
  auto* serve = app.add_subcommand("serve", "HTTP API for the gallery UI");
  serve->add_option("--pool", se_pool, "pool directory")->required()->envname("PICDNA_POOL")->check(CLI::ExistingDirectory);
  serve->add_option("--port", se_port, "listen port")->envname("PICDNA_PORT")->capture_default_str();
  serve->add_option("--host", se_host, "listen address")->envname("PICDNA_HOST")->capture_default_str();
  add_channel(serve, se_ch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "picdna: error code=usage detail=-1 message=" << e.what() << '\n';
    return 2;
  }

  try {
    if (*encode) {
      std::vector<std::pair<std::size_t, Image>> images;
      for (const auto& f : image_files(enc_in)) images.emplace_back(images.size(), read_pnm(f));
      const auto reg = generate_registry(std::size_t(enc_levels), images.size(), enc_seed);
      const auto pool = build_pool(images, enc_levels, enc_q, reg, ParityConfig{group_data, group_parity});
      save_pool(pool, enc_out);
      std::cout << "images " << images.size() << " oligos " << pool.oligos.size() << " -> " << enc_out.string() << '\n';
    } else if (*thumbs) {
      const auto pool = load_pool(th_pool);
      const auto p = th_ch.params();
      const auto sel = pcr_select(pool, pool.registry.layer_pairs.at(0), p.tau);
      const auto reads = sequence(sel, p.coverage, p.rates, p.seed, p.mode);
      const auto ex = extract_thumbnails(reads, pool.registry, p.tau);
      fs::create_directories(th_out);
      for (const auto& t : ex.thumbnails) {
        const auto name = "thumb_" + std::to_string(t.image_id) + (t.image.channels == 3 ? ".ppm" : ".pgm");
        write_pnm(t.image, th_out / name);
        std::cout << "image " << t.image_id << ' ' << t.image.width << 'x' << t.image.height << ' ' << name << '\n';
      }
      for (const auto& u : ex.undecodable) std::cout << "image " << u.image_id << " undecodable " << u.message << '\n';
      std::cout << "reads " << reads.reads.size() << " nucleotides " << reads.nucleotides() << '\n';
    } else if (*decode) {
      const auto pool = load_pool(de_pool);
      ProgressiveDecoder dec(pool, de_image, de_ch.params());
      std::optional<Error> failure;
      try {
        dec.advance(de_level);
      } catch (const Error& e) {
        failure = e;
      }
      if (!de_trace.empty())
        write_text(de_trace, nlohmann::json{{"image", de_image},
                                            {"level", de_level},
                                            {"decodedLevel", dec.decoded_level()},
                                            {"trace", trace_json(dec.trace())},
                                            {"cost", to_json(dec.cost())}}
                                 .dump(1) +
                                 "\n");
      if (failure) throw *failure;
      write_pnm(dec.image(), de_out);
      std::cout << "decoded image " << de_image << " level " << de_level << " read cost " << dec.cost().read_cost()
                << " nt/pixel\n";
    } else if (*cost) {
      if (!co_check.empty()) {
        std::ifstream in(co_check);
        if (!in) throw Error(ErrorCode::io, "cannot read " + co_check.string());
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::parse, std::string("table check file: ") + e.what());
        }
        bool all = true;
        for (const auto& row : j.at("rows")) {
          const auto t = table1_rows(row.at("poolCumulative").get<std::vector<double>>(),
                                     row.at("raCumulative").get<std::vector<double>>(),
                                     row.at("coverage").get<std::vector<double>>());
          std::cout << format_table1(t, row.value("name", std::string("gains")));
          const double tol = row.value("relativeTolerance", 0.0);
          for (const auto* key : {"gpd", "gra"}) {
            if (!row.contains(key)) continue;
            const auto want = row.at(key).get<std::vector<double>>();
            const auto& got = std::string(key) == "gpd" ? t.gpd : t.gra;
            bool ok = want.size() == got.size();
            std::ostringstream vals;
            for (std::size_t k = 0; k < got.size(); ++k) {
              if (k < want.size() && !(tol > 0 ? within_relative(got[k], want[k], tol) : same_to_3_sig(got[k], want[k])))
                ok = false;
              vals << (k ? " " : "") << sig3(got[k]);
            }
            all = all && ok;
            std::cout << (ok ? "PASS " : "FAIL ") << row.value("name", std::string("gains")) << ' ' << key << " {" << vals.str()
                      << "}\n";
          }
        }
        return all ? 0 : 1;
      }
      if (co_pool.empty()) throw Error(ErrorCode::usage, "cost needs --pool or --table1-check", -1);
      const auto pool = load_pool(co_pool);
      const auto in = cost_inputs_from_pool(pool, co_image, std::vector<double>(std::size_t(pool.codec.num_levels), co_coverage));
      const auto r = cost_report(in, 0);
      Table1Rows t;
      double pd = 0, ra = 0;
      for (std::size_t k = 0; k < in.n_levels; ++k) {
        for (std::size_t i = 0; i < in.n_images; ++i) {
          pd += in.oligo_count[i][k];
          if (k == 0) ra += in.oligo_count[i][0];
        }
        if (k > 0) ra += in.oligo_count[0][k];
        t.pd_oligos.push_back(pd);
        t.ra_oligos.push_back(ra);
        t.coverage.push_back(co_coverage);
      }
      t.gpd = r.gpd;
      t.gra = r.gra;
      std::cout << format_table1(t, "pool read-cost gains, image " + std::to_string(co_image));
      std::cout << "Rc " << r.rc << " nt/pixel\n";
    } else if (*sweep) {
      const auto pool = load_pool(sw_pool);
      const auto p = sw_ch.params();
      const int level = sw_level < 0 ? pool.codec.num_levels - 1 : sw_level;
      std::cout << "coverage,trials,successes,successRate\n";
      for (const auto& row : coverage_sweep(pool, sw_image, level, p.rates, parse_coverages(sw_cov), sw_seeds, p.seed, p.mode))
        std::cout << row.coverage << ',' << row.trials << ',' << row.successes << ',' << row.success_rate() << '\n';
    } else if (*serve) {
      SessionConfig cfg;
      cfg.decode = se_ch.params();
      cfg.thumbnail_coverage = se_ch.coverage;
      cfg.thumbnail_seed = se_ch.seed;
      Session session(load_pool(se_pool), cfg);
      httplib::Server server;
      install_routes(server, session);
      running_server = &server;
      std::signal(SIGINT, [](int) {
        if (running_server) running_server->stop();
      });
      std::cout << "listening on http://" << se_host << ':' << se_port << std::endl;
      if (!server.listen(se_host, se_port)) throw Error(ErrorCode::io, "cannot listen on port " + std::to_string(se_port), se_port);
    }
  } catch (const Error& e) {
    std::cerr << "picdna: error code=" << to_string(e.code()) << " detail=" << e.detail() << " message=" << e.what() << '\n';
    return e.code() == ErrorCode::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "picdna: error code=internal detail=-1 message=" << e.what() << '\n';
    return 1;
  }
  return 0;
}
