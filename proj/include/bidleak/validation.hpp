#pragma once

#include <string>
#include <vector>

#include "bidleak/cv.hpp"

namespace bidleak {

struct ParityReport {
   EvalMetrics level[3];
   bool level2_available = true;
   double parity_threshold = 0.02;
   double evidence_threshold = 0.03;

   double auc_gap_01() const { return level[0].roc_auc - level[1].roc_auc; }
   double auc_gap_12() const { return level[1].roc_auc - level[2].roc_auc; }
   // "parity", "no_parity" or "insufficient data"
   std::string parity_verdict() const;
   bool leakage_evidence() const { return auc_gap_01() > evidence_threshold; }
   std::string to_json() const;
};

ParityReport parity_report(const CVResult& cv, double parity_threshold = 0.02,
                           double evidence_threshold = 0.03);
ParityReport parity_check(const PairDataset& level0, const PairDataset& level1,
                          const PairDataset& level2, const TrainConfig& cfg,
                          double parity_threshold = 0.02, double evidence_threshold = 0.03);

struct SignStat {
   bool available = false;
   std::size_t n = 0;
   double fraction = 0;  // share of auctions in the "later is lower" direction; ties count 1/2
   double correlation = 0;  // rank-based coefficient in [-1, 1], positive = later is lower
   double z = 0, p_value = 1;  // two-sided sign test against 1/2
};

struct IndependenceReport {
   SignStat last_vs_rank;  // (a) auctions whose winner did not bid last
   SignStat second_vs_third;  // (b) rank 2 submitted after rank 3
   SignStat third_vs_fourth;  // (b) rank 3 submitted after rank 4

   std::string to_json() const;
};

IndependenceReport independence_check(const std::vector<RankedAuction>& auctions);

// Share of bids made within 24h of the announcement at >= 95% of the reserve.
double sniper_share(const std::vector<RankedAuction>& auctions);

}  // namespace bidleak
