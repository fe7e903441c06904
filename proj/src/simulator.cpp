#include "bidleak/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include <json.hpp>

namespace bidleak {

using json = nlohmann::json;

namespace {

// announcements span the paper's collection window
const TimePoint kFirstAnnounce = *parse_time("2014-01-01T00:00:00Z");
const TimePoint kLastAnnounce = *parse_time("2018-03-01T00:00:00Z");

std::string padded(char prefix, std::size_t i, int width) {
   char buf[32];
   std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
   return buf;
}

}  // namespace

void SimConfig::validate() const {
   if (participants_distribution.empty()) throw ConfigError("participants_distribution is empty");
   double total = 0;
   for (auto [n, p] : participants_distribution) {
      if (n < 2) throw ConfigError("participants_distribution: n must be >= 2");
      if (!(p >= 0)) throw ConfigError("participants_distribution: negative weight");
      total += p;
   }
   if (!(total > 0)) throw ConfigError("participants_distribution: weights sum to zero");
   if (!(reserve_median_rubles > 0) || !(reserve_mean_rubles > reserve_median_rubles))
      throw ConfigError("reserve distribution needs mean > median > 0");
   if (!(duration_hours > 0)) throw ConfigError("duration_hours must be positive");
   if (!(timing_cost_gamma > 0)) throw ConfigError("timing_cost_gamma must be positive");
   if (!(leak_belief_beta0 > 0)) throw ConfigError("leak_belief_beta0 must be positive");
   if (!(true_alpha >= 0 && true_alpha <= 1)) throw ConfigError("true_alpha must be in [0, 1]");
   if (!(undercut_max > 0 && undercut_max <= 0.05))
      throw ConfigError("undercut_max must be in (0, 0.05]");
   if (!(leak_window_minutes > 0 && leak_window_minutes <= duration_hours * 60))
      throw ConfigError("leak_window_minutes must be in (0, duration]");
   if (!(timing_noise_minutes >= 0)) throw ConfigError("timing_noise_minutes must be >= 0");
   if (!(repeat_pair_rate >= 0 && repeat_pair_rate <= 1))
      throw ConfigError("repeat_pair_rate must be in [0, 1]");
}

std::string SimConfig::to_json() const {
   json pd = json::object();
   for (auto [n, p] : participants_distribution) pd[std::to_string(n)] = p;
   json j{{"n_auctions", n_auctions},
          {"participants_distribution", pd},
          {"reserve_mean_rubles", reserve_mean_rubles},
          {"reserve_median_rubles", reserve_median_rubles},
          {"duration_hours", duration_hours},
          {"timing_cost_gamma", timing_cost_gamma},
          {"leak_belief_beta0", leak_belief_beta0},
          {"true_alpha", true_alpha},
          {"undercut_max", undercut_max},
          {"leak_window_minutes", leak_window_minutes},
          {"timing_noise_minutes", timing_noise_minutes},
          {"repeat_pair_rate", repeat_pair_rate},
          {"timing_confound", timing_confound},
          {"seed", seed}};
   return j.dump(2);
}

SimConfig SimConfig::from_json(const std::string& text) {
   SimConfig c;
   json j;
   try {
      j = json::parse(text);
   } catch (const json::exception& e) {
      throw ConfigError(std::string("sim config: ") + e.what());
   }
   if (!j.is_object()) throw ConfigError("sim config: expected an object");
   try {
      for (auto& [k, v] : j.items()) {
         if (k == "n_auctions") c.n_auctions = v.get<std::size_t>();
         else if (k == "participants_distribution") {
            c.participants_distribution.clear();
            for (auto& [n, p] : v.items()) c.participants_distribution[std::stoi(n)] = p.get<double>();
         }
         else if (k == "reserve_mean_rubles") c.reserve_mean_rubles = v.get<double>();
         else if (k == "reserve_median_rubles") c.reserve_median_rubles = v.get<double>();
         else if (k == "duration_hours") c.duration_hours = v.get<double>();
         else if (k == "timing_cost_gamma") c.timing_cost_gamma = v.get<double>();
         else if (k == "leak_belief_beta0") c.leak_belief_beta0 = v.get<double>();
         else if (k == "true_alpha") c.true_alpha = v.get<double>();
         else if (k == "undercut_max") c.undercut_max = v.get<double>();
         else if (k == "leak_window_minutes") c.leak_window_minutes = v.get<double>();
         else if (k == "timing_noise_minutes") c.timing_noise_minutes = v.get<double>();
         else if (k == "repeat_pair_rate") c.repeat_pair_rate = v.get<double>();
         else if (k == "timing_confound") c.timing_confound = v.get<bool>();
         else if (k == "seed") c.seed = v.get<std::uint64_t>();
         else throw ConfigError("sim config: unknown field '" + k + "'");
      }
   } catch (const json::exception& e) {
      throw ConfigError(std::string("sim config: ") + e.what());
   } catch (const std::logic_error& e) {
      throw ConfigError(std::string("sim config: ") + e.what());
   }
   c.validate();
   return c;
}

double equilibrium_bid(double v, int n) {
   if (!(v >= 0 && v <= 1)) throw std::domain_error("equilibrium_bid: v outside [0, 1]");
   if (n < 2) throw std::domain_error("equilibrium_bid: n must be >= 2");
   return 1.0 - v * double(n - 1) / double(n);
}

double expected_profit(double v, int n) {
   if (!(v >= 0 && v <= 1)) throw std::domain_error("expected_profit: v outside [0, 1]");
   if (n < 2) throw std::domain_error("expected_profit: n must be >= 2");
   return std::pow(v, n) / double(n);
}

double timing_objective(double t, double v, int n, double gamma, double beta0) {
   return expected_profit(v, n) * (1 - beta0 * (1 - t)) - gamma * t / (1 - t);
}

// FOC: gamma/(1-t)^2 = beta0 v^n/n
double optimal_timing(double v, int n, double gamma, double beta0) {
   if (!(gamma > 0) || !(beta0 > 0)) throw std::domain_error("optimal_timing: gamma, beta0 > 0");
   const double prof = expected_profit(v, n);
   if (prof == 0) return 0.0;
   return std::max(0.0, 1 - std::sqrt(gamma / (beta0 * prof)));
}

SyntheticAuction simulate_auction(const SimConfig& cfg, std::mt19937_64& rng) {
   std::uniform_real_distribution<double> unif(0.0, 1.0);

   std::vector<int> ns;
   std::vector<double> ws;
   for (auto [n, p] : cfg.participants_distribution) {
      ns.push_back(n);
      ws.push_back(p);
   }
   std::discrete_distribution<std::size_t> pick_n(ws.begin(), ws.end());
   const int n = ns[pick_n(rng)];

   const double mu = std::log(cfg.reserve_median_rubles);
   const double sigma = std::sqrt(2 * std::log(cfg.reserve_mean_rubles / cfg.reserve_median_rubles));
   std::lognormal_distribution<double> reserve_dist(mu, sigma);
   double reserve_rub;
   do {
      reserve_rub = std::round(reserve_dist(rng));
   } while (reserve_rub > double(kReserveCap / 100) || reserve_rub < 1);
   const Kopecks reserve = Kopecks(reserve_rub) * 100;

   const double D = cfg.duration_hours * 60;  // minutes
   const TimePoint dsec = TimePoint(std::llround(D * 60));
   const TimePoint span = (kLastAnnounce - kFirstAnnounce - dsec) / 60;
   std::uniform_int_distribution<TimePoint> pick_start(0, span);
   const TimePoint announce = kFirstAnnounce + pick_start(rng) * 60;

   SyntheticAuction sa;
   AuctionRecord& rec = sa.record;
   rec.reserve_price = reserve;
   rec.announce_at = announce;
   rec.deadline_at = announce + dsec;

   std::normal_distribution<double> noise(0.0, cfg.timing_noise_minutes > 0 ? cfg.timing_noise_minutes : 1.0);
   TimePoint latest = announce;
   Kopecks lowest = reserve;
   for (int i = 0; i < n; ++i) {
      const double v = unif(rng);
      sa.valuations.push_back(v);
      const double t = cfg.timing_confound
                           ? optimal_timing(v, n, cfg.timing_cost_gamma, cfg.leak_belief_beta0)
                           : 0.85 * unif(rng);
      double tm = t * D;
      if (cfg.timing_noise_minutes > 0) {
         // truncated Gaussian by rejection
         double draw = tm + noise(rng);
         for (int k = 0; k < 1000 && !(draw >= 0 && draw <= D); ++k) draw = tm + noise(rng);
         tm = std::clamp(draw, 0.0, D);
      }
      const TimePoint at = std::clamp(announce + TimePoint(std::llround(tm * 60)), rec.announce_at,
                                      rec.deadline_at);
      const Kopecks amount =
          std::clamp(Kopecks(std::llround(double(reserve) * equilibrium_bid(v, n))), Kopecks(1), reserve);
      rec.bids.push_back({"h" + std::to_string(i), amount, at});
      latest = std::max(latest, at);
      lowest = std::min(lowest, amount);
   }

   if (unif(rng) < cfg.true_alpha && lowest > 1) {
      const double u = cfg.undercut_max * (1.0 - unif(rng));  // (0, undercut_max]
      const Kopecks cut = std::max<Kopecks>(1, std::llround(u * double(reserve)));
      const Kopecks amount = std::max<Kopecks>(1, lowest - cut);
      const double lo = std::max(D - cfg.leak_window_minutes, double(latest - announce) / 60.0);
      const double tf = lo + (D - lo) * unif(rng);
      TimePoint at = announce + TimePoint(std::llround(tf * 60));
      at = std::clamp(std::max(at, latest + 1), rec.announce_at, rec.deadline_at);
      rec.bids.push_back({"f", amount, at});
      sa.corrupted = true;
      sa.favored_participant = "f";
   }
   return sa;
}

SimDataset generate_dataset(const SimConfig& cfg) {
   cfg.validate();
   SimDataset ds;
   ds.auctions.reserve(cfg.n_auctions);
   const auto s_lo = std::uint32_t(cfg.seed), s_hi = std::uint32_t(cfg.seed >> 32);
   for (std::size_t i = 0; i < cfg.n_auctions; ++i) {
      std::seed_seq seq{s_lo, s_hi, std::uint32_t(i), std::uint32_t(std::uint64_t(i) >> 32)};
      std::mt19937_64 rng(seq);
      ds.auctions.push_back(simulate_auction(cfg, rng));
   }

   // identities: a separate sequential stream so economics stay per-auction
   std::seed_seq seq{s_lo, s_hi, 0x1d5u, 0x1d5u};
   std::mt19937_64 rng(seq);
   std::uniform_real_distribution<double> unif(0.0, 1.0);
   const std::size_t n_procurers = std::max<std::size_t>(1, cfg.n_auctions / 10);
   std::uniform_int_distribution<std::size_t> pick_procurer(0, n_procurers - 1);
   std::vector<std::vector<std::string>> past(n_procurers);
   std::vector<std::set<std::string>> past_set(n_procurers);
   std::size_t next_participant = 0;

   for (std::size_t i = 0; i < ds.auctions.size(); ++i) {
      auto& sa = ds.auctions[i];
      const std::size_t q = pick_procurer(rng);
      sa.record.auction_id = padded('A', i + 1, 7);
      sa.record.procurer_id = padded('Q', q + 1, 5);
      std::set<std::string> used;
      for (auto& b : sa.record.bids) {
         std::string id;
         if (!past[q].empty() && unif(rng) < cfg.repeat_pair_rate) {
            std::uniform_int_distribution<std::size_t> pick(0, past[q].size() - 1);
            for (int tries = 0; tries < 8 && id.empty(); ++tries) {
               const auto& cand = past[q][pick(rng)];
               if (!used.count(cand)) id = cand;
            }
         }
         if (id.empty()) id = padded('P', ++next_participant, 7);
         if (b.participant_id == "f") sa.favored_participant = id;
         b.participant_id = id;
         used.insert(id);
      }
      for (const auto& id : used)
         if (past_set[q].insert(id).second) past[q].push_back(id);
   }
   return ds;
}

std::vector<AuctionRecord> SimDataset::records() const {
   std::vector<AuctionRecord> out;
   out.reserve(auctions.size());
   for (const auto& a : auctions) out.push_back(a.record);
   return out;
}

std::map<std::string, bool> SimDataset::ground_truth() const {
   std::map<std::string, bool> out;
   for (const auto& a : auctions) out[a.record.auction_id] = a.corrupted;
   return out;
}

void write_ground_truth(std::ostream& out, const SimDataset& ds) {
   out << "auction_id,corrupted,favored_participant\n";
   for (const auto& a : ds.auctions)
      out << a.record.auction_id << ',' << (a.corrupted ? 1 : 0) << ','
          << a.favored_participant.value_or("") << '\n';
}

}  // namespace bidleak
