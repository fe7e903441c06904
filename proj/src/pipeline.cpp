#include "bidleak/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bidleak/csv.hpp"

namespace bidleak {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

std::string read_file(const std::string& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in) throw DataError("cannot open " + path);
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
   const fs::path target(path);
   const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
   {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write " + tmp.string());
      out << content;
      out.flush();
      if (!out) throw DataError("write failed for " + tmp.string());
   }
   fs::rename(tmp, target);
}

std::string sha256_hex(const std::string& data) {
   unsigned char md[EVP_MAX_MD_SIZE];
   unsigned int len = 0;
   EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
   std::string hex;
   char buf[3];
   for (unsigned i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      hex += buf;
   }
   return hex;
}

std::string PipelineConfig::to_json() const {
   json j;
   j["input_csv"] = input_csv;
   j["simulate"] = simulate ? json::parse(simulate->to_json()) : json(nullptr);
   j["out_dir"] = out_dir;
   j["train"] = {{"n_trees", train.n_trees},       {"max_depth", train.max_depth},
                 {"learning_rate", train.learning_rate}, {"min_samples_leaf", train.min_samples_leaf},
                 {"n_folds", train.n_folds},       {"n_repeats", train.n_repeats},
                 {"seed", train.seed}};
   j["estimator"] = {{"grid_size", estimator.grid_size},
                     {"bandwidth", estimator.bandwidth ? json(*estimator.bandwidth) : json(nullptr)},
                     {"shared_bandwidth", estimator.shared_bandwidth},
                     {"delta_correction", estimator.delta_correction},
                     {"alpha0", estimator.em.alpha0},
                     {"tol", estimator.em.tol},
                     {"max_iter", estimator.em.max_iter},
                     {"regularize", estimator.em.regularize},
                     {"fair_mass_floor", estimator.em.fair_mass_floor}};
   j["groupings"] = groupings;
   j["now"] = now ? json(format_time(*now)) : json(nullptr);
   j["parity_threshold"] = parity_threshold;
   j["evidence_threshold"] = evidence_threshold;
   return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
   PipelineConfig c;
   try {
      const json j = json::parse(text);
      if (!j.is_object()) throw ConfigError("pipeline config: expected an object");
      auto known = [](const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
         if (!obj.is_object()) throw ConfigError("pipeline config: '" + where + "' must be an object");
         for (const auto& [k, v] : obj.items())
            if (std::none_of(keys.begin(), keys.end(), [&](const char* n) { return k == n; }))
               throw ConfigError("pipeline config: unknown field '" + (where.empty() ? k : where + "." + k) + "'");
      };
      known(j, {"input_csv", "simulate", "out_dir", "train", "estimator", "groupings", "now",
                "parity_threshold", "evidence_threshold"}, "");
      if (j.contains("train"))
         known(j["train"], {"n_trees", "max_depth", "learning_rate", "min_samples_leaf", "n_folds",
                            "n_repeats", "seed"}, "train");
      if (j.contains("estimator"))
         known(j["estimator"], {"grid_size", "bandwidth", "shared_bandwidth", "delta_correction", "alpha0",
                                "tol", "max_iter", "regularize", "fair_mass_floor"}, "estimator");
      c.input_csv = j.value("input_csv", "");
      if (j.contains("simulate") && !j["simulate"].is_null())
         c.simulate = SimConfig::from_json(j["simulate"].dump());
      c.out_dir = j.value("out_dir", "");
      if (j.contains("train")) {
         const auto& t = j["train"];
         c.train.n_trees = t.value("n_trees", c.train.n_trees);
         c.train.max_depth = t.value("max_depth", c.train.max_depth);
         c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
         c.train.min_samples_leaf = t.value("min_samples_leaf", c.train.min_samples_leaf);
         c.train.n_folds = t.value("n_folds", c.train.n_folds);
         c.train.n_repeats = t.value("n_repeats", c.train.n_repeats);
         c.train.seed = t.value("seed", c.train.seed);
      }
      if (j.contains("estimator")) {
         const auto& e = j["estimator"];
         auto& s = c.estimator;
         s.grid_size = e.value("grid_size", s.grid_size);
         if (e.contains("bandwidth") && !e["bandwidth"].is_null()) s.bandwidth = e["bandwidth"].get<double>();
         s.shared_bandwidth = e.value("shared_bandwidth", s.shared_bandwidth);
         s.delta_correction = e.value("delta_correction", s.delta_correction);
         s.em.alpha0 = e.value("alpha0", s.em.alpha0);
         s.em.tol = e.value("tol", s.em.tol);
         s.em.max_iter = e.value("max_iter", s.em.max_iter);
         s.em.regularize = e.value("regularize", s.em.regularize);
         s.em.fair_mass_floor = e.value("fair_mass_floor", s.em.fair_mass_floor);
      }
      if (j.contains("groupings")) c.groupings = j["groupings"].get<std::vector<std::string>>();
      if (j.contains("now") && !j["now"].is_null()) {
         auto t = parse_time(j["now"].get<std::string>());
         if (!t) throw ConfigError("pipeline config: bad 'now' timestamp");
         c.now = *t;
      }
      c.parity_threshold = j.value("parity_threshold", c.parity_threshold);
      c.evidence_threshold = j.value("evidence_threshold", c.evidence_threshold);
   } catch (const json::exception& e) {
      throw ConfigError(std::string("pipeline config: ") + e.what());
   }
   c.train.validate();
   if (c.estimator.grid_size < 2) throw ConfigError("grid_size must be >= 2");
   if (c.estimator.bandwidth && !(*c.estimator.bandwidth > 0))
      throw ConfigError("bandwidth must be positive");
   if (!(c.estimator.em.fair_mass_floor >= 0 && c.estimator.em.fair_mass_floor < 1))
      throw ConfigError("fair_mass_floor must be in [0, 1)");
   const auto& keys = grouping_keys();
   for (const auto& g : c.groupings)
      if (std::find(keys.begin(), keys.end(), g) == keys.end())
         throw ConfigError("unknown grouping '" + g + "'");
   return c;
}

namespace {

void split(const OOFPredictions& o, std::vector<double>& win, std::vector<double>& ru) {
   for (std::size_t i = 0; i < o.size(); ++i) (o.label[i] == 1 ? win : ru).push_back(o.y[i]);
}

}  // namespace

Estimation estimate_from_predictions(const OOFPredictions& level0, const OOFPredictions& level1,
                                     const EstimatorSettings& s) {
   std::vector<double> w0, r0, w1, r1;
   split(level0, w0, r0);
   split(level1, w1, r1);
   if (w0.size() < kMinKdePoints || r0.size() < kMinKdePoints)
      throw DataError("estimate: fewer than 100 winners or runner-ups");
   const bool use_delta = s.delta_correction;
   if (use_delta && (w1.size() < kMinKdePoints || r1.size() < kMinKdePoints))
      throw DataError("estimate: fewer than 100 placebo rows for the delta correction");

   std::optional<double> bw_w, bw_r, bw_d;
   if (s.bandwidth) {
      bw_w = bw_r = bw_d = s.bandwidth;
   } else if (s.shared_bandwidth) {
      double h = std::min(silverman_bandwidth(w0), silverman_bandwidth(r0));
      if (use_delta) h = std::min({h, silverman_bandwidth(w1), silverman_bandwidth(r1)});
      bw_w = bw_r = bw_d = std::max(h, grid_bandwidth_floor(s.grid_size));
   }
   const auto f_w = estimate_density(w0, s.grid_size, bw_w);
   const auto f_wbar = estimate_density(r0, s.grid_size, bw_r);
   DeltaCorrection delta;
   if (use_delta) {
      delta = estimate_delta(w1, r1, s.grid_size, bw_d);
   } else {
      delta.grid = f_w.grid;
      delta.values.assign(s.grid_size, 0.0);
   }

   Estimation out;
   out.estimate = em_estimate(f_w, f_wbar, delta, w0, s.em);
   out.f_w = f_w;
   out.f_wbar = f_wbar;
   out.delta = delta;
   for (std::size_t i = 0; i < level0.size(); ++i)
      if (level0.label[i] == 1)
         out.posteriors.push_back({level0.auction_id[i], level0.y[i],
                                   posterior_for_auction(out.estimate, level0.y[i])});
   return out;
}

PipelineResult analyze(const std::vector<AuctionRecord>& records, const PipelineConfig& cfg,
                       TimePoint now) {
   PipelineResult res;
   auto filtered = validate_and_filter(records, now);
   res.filter = filtered.report;
   const auto& kept = filtered.kept;
   if (kept.empty()) throw DataError("no auctions left after filtering");
   res.stats = compute_stats(kept);

   const auto ranked = rank_all(kept);
   const auto history = build_history_index(kept);
   for (int l = 0; l < 3; ++l) res.levels[l] = build_pair_dataset(ranked, {l}, history);

   std::vector<const PairDataset*> also = {&res.levels[1]};
   if (!res.levels[2].rows.empty()) also.push_back(&res.levels[2]);
   res.cv = cross_val_predict(res.levels[0], cfg.train, also);
   res.parity = parity_report(res.cv, cfg.parity_threshold, cfg.evidence_threshold);

   res.estimation = estimate_from_predictions(res.cv.oof, res.cv.applied[0], cfg.estimator);
   if (!res.estimation.estimate.converged)
      throw ConvergenceError("EM did not converge within " + std::to_string(cfg.estimator.em.max_iter) +
                             " iterations");
   EstimatorSettings plain = cfg.estimator;
   plain.delta_correction = false;
   res.alpha_no_delta = estimate_from_predictions(res.cv.oof, res.cv.applied[0], plain).estimate.alpha;

   for (const auto& g : cfg.groupings)
      res.reports[g] = aggregate_alpha(res.estimation.posteriors, kept, g);
   res.independence = independence_check(ranked);
   res.sniper = sniper_share(ranked);
   return res;
}

namespace {

template <class F>
std::string render(F&& f) {
   std::ostringstream ss;
   f(ss);
   return ss.str();
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
   if (cfg.out_dir.empty()) throw ConfigError("pipeline: output directory required");
   if (cfg.input_csv.empty() && !cfg.simulate)
      throw ConfigError("pipeline: need input_csv or a simulate block");
   if (!cfg.input_csv.empty() && !fs::exists(cfg.input_csv))
      throw ConfigError("pipeline: input not found: " + cfg.input_csv);
   fs::create_directories(cfg.out_dir);

   const TimePoint now =
       cfg.now ? *cfg.now
               : TimePoint(std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count());
   PipelineConfig recorded = cfg;
   recorded.now = now;

   std::vector<std::string> written;
   std::map<std::string, std::string> digests;
   auto put = [&](const std::string& name, const std::string& content) {
      const auto path = (fs::path(cfg.out_dir) / name).string();
      atomic_write(path, content);
      written.push_back(path);
      digests[name] = sha256_hex(content);
   };

   try {
      std::string input_text, input_name;
      json inputs = json::object();
      if (cfg.simulate) {
         const auto sim = generate_dataset(*cfg.simulate);
         input_text = render([&](std::ostream& o) { write_auctions(o, sim.records()); });
         put("auctions.csv", input_text);
         put("ground_truth.csv", render([&](std::ostream& o) { write_ground_truth(o, sim); }));
      } else {
         input_text = read_file(cfg.input_csv);
         inputs[cfg.input_csv] = sha256_hex(input_text);
      }
      std::istringstream in(input_text);
      const auto parsed = parse_auctions(in);
      put("rejects.csv", render([&](std::ostream& o) {
             o << "line,reason,raw\n";
             for (const auto& r : parsed.rejects)
                o << r.line << ',' << r.reason << ',' << csv::quote(r.raw) << '\n';
          }));

      PipelineResult res = analyze(parsed.records, cfg, now);

      put("filter_report.json", res.filter.to_json());
      put("stats.json", res.stats.to_json());
      for (int l = 0; l < 3; ++l)
         put("pairs_level" + std::to_string(l) + ".csv",
             render([&](std::ostream& o) { write_pair_dataset(o, res.levels[l]); }));
      std::vector<const OOFPredictions*> lv = {&res.cv.oof};
      for (const auto& a : res.cv.applied) lv.push_back(&a);
      put("predictions.csv", render([&](std::ostream& o) { write_predictions(o, lv); }));
      put("parity.json", res.parity.to_json());
      put("model.json", train_gbt(res.levels[0], cfg.train).to_json());
      put("mixture.json", res.estimation.estimate.to_json());
      put("posteriors.csv",
          render([&](std::ostream& o) { write_posteriors(o, res.estimation.posteriors); }));
      for (const auto& [g, t] : res.reports)
         put("report_" + g + ".csv", render([&](std::ostream& o) { write_report(o, t); }));
      json validation{{"independence", json::parse(res.independence.to_json())},
                      {"sniper_share", res.sniper}};
      put("validation.json", validation.dump(2));
      json summary{{"alpha", res.alpha()},
                   {"alpha_no_delta_correction", res.alpha_no_delta},
                   {"em_iterations", res.estimation.estimate.iterations},
                   {"em_converged", res.estimation.estimate.converged},
                   {"auctions_total", res.filter.total},
                   {"auctions_kept", res.filter.kept},
                   {"parity", json::parse(res.parity.to_json())}};
      put("summary.json", summary.dump(2));

      const std::string cfg_text = recorded.to_json();
      json manifest{{"tool", "bidleak"},
                    {"version", kVersion},
                    {"config", json::parse(cfg_text)},
                    {"config_sha256", sha256_hex(cfg_text)},
                    {"seeds", {{"train", cfg.train.seed},
                               {"simulate", cfg.simulate ? json(cfg.simulate->seed) : json(nullptr)}}},
                    {"inputs", inputs},
                    {"outputs", digests}};
      put("manifest.json", manifest.dump(2));
      return res;
   } catch (...) {
      for (const auto& p : written) {
         std::error_code ec;
         fs::remove(p, ec);
      }
      throw;
   }
}

}  // namespace bidleak
