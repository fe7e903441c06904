// bidleak: command-line front end for the detection pipeline.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 convergence failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bidleak/csv.hpp"
#include "bidleak/pipeline.hpp"

using namespace bidleak;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Args {
   std::string config, input, out, grouping, posteriors;
   std::optional<std::uint64_t> seed;
   std::optional<double> true_alpha;
   bool no_delta = false;
   std::optional<std::string> now;
};

std::string out_path(const Args& a, const std::string& name) {
   if (a.out.empty()) throw ConfigError("--out is required");
   fs::create_directories(a.out);
   return (fs::path(a.out) / name).string();
}

template <class F>
std::string render(F&& f) {
   std::ostringstream ss;
   f(ss);
   return ss.str();
}

TimePoint resolve_now(const Args& a) {
   if (a.now) {
      auto t = parse_time(*a.now);
      if (!t) throw ConfigError("--now: expected YYYY-MM-DDTHH:MM:SSZ");
      return *t;
   }
   return TimePoint(std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count());
}

PipelineConfig load_pipeline_config(const Args& a) {
   PipelineConfig cfg;
   if (!a.config.empty()) {
      if (!fs::exists(a.config)) throw ConfigError("config not found: " + a.config);
      cfg = PipelineConfig::from_json(read_file(a.config));
   }
   if (a.seed) cfg.train.seed = *a.seed;
   if (a.no_delta) cfg.estimator.delta_correction = false;
   if (a.now) cfg.now = resolve_now(a);
   return cfg;
}

ParseResult load_auctions(const std::string& path) {
   if (path.empty()) throw ConfigError("--input is required");
   std::ifstream in(path, std::ios::binary);
   if (!in) throw ConfigError("input not found: " + path);
   return parse_auctions(in);
}

std::vector<AuctionRecord> load_filtered(const Args& a) {
   auto parsed = load_auctions(a.input);
   return validate_and_filter(parsed.records, resolve_now(a)).kept;
}

int cmd_simulate(const Args& a) {
   SimConfig cfg;
   if (!a.config.empty()) cfg = SimConfig::from_json(read_file(a.config));
   if (a.seed) cfg.seed = *a.seed;
   if (a.true_alpha) cfg.true_alpha = *a.true_alpha;
   cfg.validate();
   const auto ds = generate_dataset(cfg);
   atomic_write(out_path(a, "auctions.csv"), render([&](std::ostream& o) { write_auctions(o, ds.records()); }));
   atomic_write(out_path(a, "ground_truth.csv"), render([&](std::ostream& o) { write_ground_truth(o, ds); }));
   atomic_write(out_path(a, "sim_config.json"), cfg.to_json());
   std::cout << "simulated " << ds.auctions.size() << " auctions\n";
   return 0;
}

int cmd_ingest(const Args& a) {
   auto parsed = load_auctions(a.input);
   auto res = validate_and_filter(parsed.records, resolve_now(a));
   atomic_write(out_path(a, "auctions_clean.csv"), render([&](std::ostream& o) { write_auctions(o, res.kept); }));
   atomic_write(out_path(a, "filter_report.json"), res.report.to_json());
   atomic_write(out_path(a, "rejects.csv"), render([&](std::ostream& o) {
                   o << "line,reason,raw\n";
                   for (const auto& r : parsed.rejects)
                      o << r.line << ',' << r.reason << ',' << csv::quote(r.raw) << '\n';
                }));
   std::cout << res.report.to_json() << "\nrejected rows: " << parsed.rejects.size() << "\n";
   return 0;
}

int cmd_stats(const Args& a) {
   const auto st = compute_stats(load_filtered(a));
   if (!a.out.empty()) atomic_write(out_path(a, "stats.json"), st.to_json());
   std::cout << st.to_json() << "\n";
   return 0;
}

int cmd_features(const Args& a) {
   const auto kept = load_filtered(a);
   const auto ranked = rank_all(kept);
   const auto hist = build_history_index(kept);
   for (int l = 0; l < 3; ++l) {
      const auto ds = build_pair_dataset(ranked, {l}, hist);
      atomic_write(out_path(a, "pairs_level" + std::to_string(l) + ".csv"),
                   render([&](std::ostream& o) { write_pair_dataset(o, ds); }));
      std::cout << "level " << l << ": " << ds.rows.size() << " rows, " << ds.skipped << " auctions skipped\n";
   }
   return 0;
}

PairDataset load_pairs(const std::string& path, int level) {
   std::ifstream in(path, std::ios::binary);
   if (!in) throw ConfigError("pair dataset not found: " + path);
   return read_pair_dataset(in, {level});
}

// --input is pairs_level0.csv; sibling level 1/2 files are used when present.
int cmd_train_eval(const Args& a) {
   const auto cfg = load_pipeline_config(a);
   if (a.input.empty()) throw ConfigError("--input is required");
   const auto l0 = load_pairs(a.input, 0);
   const auto dir = fs::path(a.input).parent_path();
   std::vector<PairDataset> extra;
   for (int l = 1; l <= 2; ++l) {
      const auto p = dir / ("pairs_level" + std::to_string(l) + ".csv");
      if (fs::exists(p)) extra.push_back(load_pairs(p.string(), l));
   }
   std::vector<const PairDataset*> also;
   for (const auto& e : extra)
      if (!e.rows.empty()) also.push_back(&e);
   const auto cv = cross_val_predict(l0, cfg.train, also);
   std::vector<const OOFPredictions*> lv = {&cv.oof};
   for (const auto& o : cv.applied) lv.push_back(&o);
   atomic_write(out_path(a, "predictions.csv"), render([&](std::ostream& o) { write_predictions(o, lv); }));
   atomic_write(out_path(a, "model.json"), train_gbt(l0, cfg.train).to_json());
   json metrics = json::array();
   for (const auto* o : lv) {
      const auto m = evaluate(*o);
      metrics.push_back({{"accuracy", m.accuracy}, {"accuracy_std", m.accuracy_std},
                         {"roc_auc", m.roc_auc}, {"roc_auc_std", m.roc_auc_std}});
   }
   if (cv.applied.size() >= 1) {
      const auto rep = parity_report(cv, cfg.parity_threshold, cfg.evidence_threshold);
      atomic_write(out_path(a, "parity.json"), rep.to_json());
   }
   std::cout << metrics.dump(2) << "\n";
   return 0;
}

int cmd_estimate(const Args& a) {
   const auto cfg = load_pipeline_config(a);
   if (a.input.empty()) throw ConfigError("--input is required");
   std::ifstream in(a.input, std::ios::binary);
   if (!in) throw ConfigError("predictions not found: " + a.input);
   const auto levels = read_predictions(in);
   if (levels.empty()) throw DataError("no predictions");
   OOFPredictions empty;
   const auto est = estimate_from_predictions(levels[0], levels.size() > 1 ? levels[1] : empty, cfg.estimator);
   atomic_write(out_path(a, "mixture.json"), est.estimate.to_json());
   atomic_write(out_path(a, "posteriors.csv"), render([&](std::ostream& o) { write_posteriors(o, est.posteriors); }));
   std::cout << "alpha " << est.estimate.alpha << " (iterations " << est.estimate.iterations << ")\n";
   if (!est.estimate.converged) {
      std::cerr << "EM did not converge\n";
      return 4;
   }
   return 0;
}

int cmd_report(const Args& a) {
   if (a.posteriors.empty()) throw ConfigError("--posteriors is required");
   const auto kept = load_filtered(a);
   std::ifstream in(a.posteriors, std::ios::binary);
   if (!in) throw ConfigError("posteriors not found: " + a.posteriors);
   const auto post = read_posteriors(in);
   std::vector<std::string> keys = a.grouping.empty() ? grouping_keys() : std::vector<std::string>{a.grouping};
   for (const auto& k : keys) {
      const auto t = aggregate_alpha(post, kept, k);
      const auto text = render([&](std::ostream& o) { write_report(o, t); });
      if (!a.out.empty()) atomic_write(out_path(a, "report_" + k + ".csv"), text);
      else std::cout << text;
   }
   return 0;
}

int cmd_validate(const Args& a) {
   const auto cfg = load_pipeline_config(a);
   const auto kept = load_filtered(a);
   const auto ranked = rank_all(kept);
   const auto hist = build_history_index(kept);
   PairDataset lv[3];
   for (int l = 0; l < 3; ++l) lv[l] = build_pair_dataset(ranked, {l}, hist);
   const auto parity = parity_check(lv[0], lv[1], lv[2], cfg.train, cfg.parity_threshold, cfg.evidence_threshold);
   json j{{"parity", json::parse(parity.to_json())},
          {"independence", json::parse(independence_check(ranked).to_json())},
          {"sniper_share", sniper_share(ranked)}};
   if (!a.out.empty()) atomic_write(out_path(a, "validation.json"), j.dump(2));
   std::cout << j.dump(2) << "\n";
   return 0;
}

int cmd_pipeline(const Args& a) {
   auto cfg = load_pipeline_config(a);
   if (!a.input.empty()) cfg.input_csv = a.input;
   if (!a.out.empty()) cfg.out_dir = a.out;
   if (cfg.input_csv.empty() && !cfg.simulate) cfg.simulate = SimConfig{};
   if (cfg.simulate) {
      if (a.seed) cfg.simulate->seed = *a.seed;
      if (a.true_alpha) cfg.simulate->true_alpha = *a.true_alpha;
   }
   const auto res = run_pipeline(cfg);
   std::cout << "alpha " << res.alpha() << " (without delta correction " << res.alpha_no_delta << ")\n"
             << "AUC level0 " << res.parity.level[0].roc_auc << ", level1 " << res.parity.level[1].roc_auc;
   if (res.parity.level2_available) std::cout << ", level2 " << res.parity.level[2].roc_auc;
   std::cout << "\nartifacts in " << cfg.out_dir << "\n";
   return 0;
}

}  // namespace

int main(int argc, char** argv) {
   CLI::App app{"Bid-leakage detection for first-price sealed-bid procurement auctions"};
   app.require_subcommand(1);
   Args a;

   auto common = [&](CLI::App* s) {
      s->add_option("--config", a.config, "JSON config file");
      s->add_option("--input", a.input, "input CSV");
      s->add_option("--out", a.out, "output directory");
      s->add_option("--seed", a.seed, "random seed");
      s->add_option("--now", a.now, "reference time for the future-timestamp filter (ISO-8601 UTC)");
   };
   auto sim = app.add_subcommand("simulate", "generate synthetic auctions with ground truth");
   common(sim);
   sim->add_option("--true-alpha", a.true_alpha, "share of corrupted auctions");
   auto ingest = app.add_subcommand("ingest", "parse and filter an auction CSV");
   common(ingest);
   auto stats = app.add_subcommand("stats", "dataset summary statistics");
   common(stats);
   auto feats = app.add_subcommand("features", "winner/runner-up pair datasets for levels 0-2");
   common(feats);
   auto train = app.add_subcommand("train-eval", "grouped cross-validation on pairs_level0.csv");
   common(train);
   auto est = app.add_subcommand("estimate", "prior and posteriors from predictions.csv");
   common(est);
   est->add_flag("--no-delta-correction", a.no_delta, "skip the placebo correction");
   auto rep = app.add_subcommand("report", "posterior aggregated by auction characteristics");
   common(rep);
   rep->add_option("--grouping", a.grouping, "grouping key (default: all)");
   rep->add_option("--posteriors", a.posteriors, "posteriors.csv from estimate");
   auto val = app.add_subcommand("validate", "parity, independence and sniper checks");
   common(val);
   auto pipe = app.add_subcommand("pipeline", "all stages end to end");
   common(pipe);
   pipe->add_option("--true-alpha", a.true_alpha, "simulate with this share when no input is given");
   pipe->add_flag("--no-delta-correction", a.no_delta, "skip the placebo correction");

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
   }

   try {
      if (*sim) return cmd_simulate(a);
      if (*ingest) return cmd_ingest(a);
      if (*stats) return cmd_stats(a);
      if (*feats) return cmd_features(a);
      if (*train) return cmd_train_eval(a);
      if (*est) return cmd_estimate(a);
      if (*rep) return cmd_report(a);
      if (*val) return cmd_validate(a);
      if (*pipe) return cmd_pipeline(a);
   } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
   } catch (const ConvergenceError& e) {
      std::cerr << "convergence failure: " << e.what() << "\n";
      return 4;
   } catch (const DataError& e) {
      std::cerr << "data error: " << e.what() << "\n";
      return 3;
   } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
   }
   return 0;
}
