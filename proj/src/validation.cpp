#include "bidleak/validation.hpp"

#include <cmath>

#include <json.hpp>

namespace bidleak {

using json = nlohmann::json;

std::string ParityReport::parity_verdict() const {
   if (!level2_available) return "insufficient data";
   return std::abs(auc_gap_12()) < parity_threshold ? "parity" : "no_parity";
}

std::string ParityReport::to_json() const {
   json levels = json::array();
   for (int l = 0; l < 3; ++l) {
      if (l == 2 && !level2_available) {
         levels.push_back(nullptr);
         continue;
      }
      levels.push_back({{"level", l},
                        {"accuracy", level[l].accuracy},
                        {"accuracy_std", level[l].accuracy_std},
                        {"roc_auc", level[l].roc_auc},
                        {"roc_auc_std", level[l].roc_auc_std}});
   }
   json j{{"levels", levels},
          {"auc_gap_level0_level1", auc_gap_01()},
          {"parity_threshold", parity_threshold},
          {"evidence_threshold", evidence_threshold},
          {"parity_verdict", parity_verdict()},
          {"leakage_evidence", leakage_evidence()}};
   if (level2_available) j["auc_gap_level1_level2"] = auc_gap_12();
   return j.dump(2);
}

ParityReport parity_report(const CVResult& cv, double parity_threshold, double evidence_threshold) {
   ParityReport rep;
   rep.parity_threshold = parity_threshold;
   rep.evidence_threshold = evidence_threshold;
   rep.level[0] = evaluate(cv.oof);
   if (cv.applied.size() < 1) throw DataError("parity: level-1 predictions missing");
   rep.level[1] = evaluate(cv.applied[0]);
   rep.level2_available = cv.applied.size() >= 2 && !cv.applied[1].y.empty();
   if (rep.level2_available) rep.level[2] = evaluate(cv.applied[1]);
   return rep;
}

ParityReport parity_check(const PairDataset& level0, const PairDataset& level1,
                          const PairDataset& level2, const TrainConfig& cfg,
                          double parity_threshold, double evidence_threshold) {
   std::vector<const PairDataset*> also = {&level1};
   if (!level2.rows.empty()) also.push_back(&level2);
   return parity_report(cross_val_predict(level0, cfg, also), parity_threshold, evidence_threshold);
}

namespace {

void finish(SignStat& s, double lower, double signed_sum) {
   s.available = s.n > 0;
   if (!s.available) return;
   const double n = double(s.n);
   s.fraction = lower / n;
   s.correlation = signed_sum / n;
   s.z = (lower - n / 2) / std::sqrt(n / 4);
   s.p_value = std::erfc(std::abs(s.z) / std::sqrt(2.0));
}

// rank k (0-based) against rank k+1: the lower one submitted later?
SignStat pair_stat(const std::vector<RankedAuction>& auctions, std::size_t k) {
   SignStat s;
   double lower = 0, signed_sum = 0;
   for (const auto& a : auctions) {
      if (a.size() < k + 2) continue;
      const auto t1 = a.at_rank(k).submitted_at, t2 = a.at_rank(k + 1).submitted_at;
      ++s.n;
      const double v = t1 > t2 ? 1.0 : t1 == t2 ? 0.5 : 0.0;
      lower += v;
      signed_sum += 2 * v - 1;
   }
   finish(s, lower, signed_sum);
   return s;
}

json to_j(const SignStat& s) {
   if (!s.available) return {{"available", false}};
   return {{"available", true}, {"n", s.n},           {"fraction", s.fraction},
           {"correlation", s.correlation}, {"z", s.z}, {"p_value", s.p_value}};
}

}  // namespace

IndependenceReport independence_check(const std::vector<RankedAuction>& auctions) {
   IndependenceReport rep;

   // (a) where the latest bid is not the winner's, is the latest bidder the
   // lowest of the remaining bids more often than chance?
   SignStat& a = rep.last_vs_rank;
   double lower = 0, signed_sum = 0;
   for (const auto& ra : auctions) {
      const std::size_t m = ra.size() - 1;  // non-winners
      if (ra.size() < 3) continue;
      std::size_t last = 0;
      bool tie = false;
      for (std::size_t k = 1; k < ra.size(); ++k) {
         const auto t = ra.at_rank(k).submitted_at, tl = ra.at_rank(last).submitted_at;
         if (t > tl) {
            last = k;
            tie = false;
         } else if (t == tl) {
            tie = true;
         }
      }
      if (last == 0 || tie) continue;
      const double u = double(last - 1) / double(m - 1);  // 0 = runner-up
      ++a.n;
      lower += u < 0.5 ? 1.0 : u == 0.5 ? 0.5 : 0.0;
      signed_sum += 1 - 2 * u;
   }
   finish(a, lower, signed_sum);

   rep.second_vs_third = pair_stat(auctions, 1);
   rep.third_vs_fourth = pair_stat(auctions, 2);
   return rep;
}

std::string IndependenceReport::to_json() const {
   json j{{"last_bidder_rank", to_j(last_vs_rank)},
          {"second_vs_third", to_j(second_vs_third)},
          {"third_vs_fourth", to_j(third_vs_fourth)}};
   return j.dump(2);
}

double sniper_share(const std::vector<RankedAuction>& auctions) {
   std::size_t total = 0, snipers = 0;
   for (const auto& ra : auctions) {
      const auto& r = *ra.base;
      for (const auto& b : r.bids) {
         ++total;
         if (b.submitted_at - r.announce_at <= 24 * 3600 && b.amount * 100 >= 95 * r.reserve_price)
            ++snipers;
      }
   }
   if (total == 0) throw DataError("sniper_share: no bids");
   return double(snipers) / double(total);
}

}  // namespace bidleak
