#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bidleak/core.hpp"

namespace bidleak {

struct SimConfig {
   std::size_t n_auctions = 20000;
   std::map<int, double> participants_distribution = {{2, 0.55}, {3, 0.20}, {4, 0.10}, {5, 0.06},
                                                      {6, 0.04}, {7, 0.03}, {8, 0.02}};
   // log-normal reserve matched to these moments, truncated at the legal cap
   double reserve_mean_rubles = 182000;
   double reserve_median_rubles = 134000;
   double duration_hours = 169;
   // Calibrated so the fair world is only weakly separable (see README).
   double timing_cost_gamma = 0.001;
   double leak_belief_beta0 = 1.0;
   double true_alpha = 0.16;
   double undercut_max = 0.01;
   double leak_window_minutes = 60;
   double timing_noise_minutes = 7200;
   double repeat_pair_rate = 0.2;
   // false: honest timing drawn independently of valuation
   bool timing_confound = true;
   std::uint64_t seed = 1;

   void validate() const;  // throws ConfigError
   std::string to_json() const;
   static SimConfig from_json(const std::string& text);
};

struct SyntheticAuction {
   AuctionRecord record;
   bool corrupted = false;
   std::optional<std::string> favored_participant;
   std::vector<double> valuations;  // honest bidders, in bid order
};

double equilibrium_bid(double v, int n);
double expected_profit(double v, int n);
// Maximizes (v^n/n)(1 - beta(t)) - c(t) with c(t) = gamma t/(1-t), beta(t) = beta0 (1-t).
double optimal_timing(double v, int n, double gamma, double beta0);
double timing_objective(double t, double v, int n, double gamma, double beta0);

// Economics of one auction. Ids are placeholders until generate_dataset assigns them.
SyntheticAuction simulate_auction(const SimConfig& cfg, std::mt19937_64& rng);

struct SimDataset {
   std::vector<SyntheticAuction> auctions;

   std::vector<AuctionRecord> records() const;
   std::map<std::string, bool> ground_truth() const;
};

SimDataset generate_dataset(const SimConfig& cfg);

void write_ground_truth(std::ostream& out, const SimDataset& ds);

}  // namespace bidleak
