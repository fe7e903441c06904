#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bidleak/core.hpp"

namespace bidleak {

constexpr double kTimingCapMinutes = 1440.0;
constexpr double kRelativeBidCap = 0.1;

struct FeatureVector {
   double bid_last = 0;
   double met_before = 0;
   double bid_timing = 0;           // minutes to deadline, capped
   double relative_bid = 0;         // gap to the next place over reserve, capped
   double relative_bid_timing = 0;  // minutes since the previous running minimum, capped
   double n_participants = 0;

   static constexpr std::size_t kSize = 6;
   std::array<double, kSize> values() const {
      return {bid_last, met_before, bid_timing, relative_bid, relative_bid_timing, n_participants};
   }
   static const std::array<const char*, kSize>& names();
};

struct PairRow {
   std::string auction_id;
   int label = 0;  // 1 = level winner, 0 = level runner-up
   FeatureVector features;
};

struct PlaceboLevel {
   int drop_count = 0;
};

struct PairDataset {
   std::vector<PairRow> rows;
   PlaceboLevel level;
   std::size_t skipped = 0;  // auctions too short for this level
};

class HistoryIndex {
 public:
   void add(const std::string& procurer, const std::string& participant, TimePoint at);
   void finalize();
   // true iff the pair co-occurred in an auction announced strictly before t
   bool met_before(const std::string& procurer, const std::string& participant, TimePoint t) const;

 private:
   std::map<std::pair<std::string, std::string>, std::vector<TimePoint>> times_;
};

HistoryIndex build_history_index(const std::vector<AuctionRecord>& records);

// `rank` is 1-based within the bids left after removing the `drop_count` best.
FeatureVector extract_features(const RankedAuction& auction, std::size_t rank,
                               const HistoryIndex& history, int drop_count = 0);

PairDataset build_pair_dataset(const std::vector<RankedAuction>& auctions, PlaceboLevel level,
                               const HistoryIndex& history);

extern const char* const kPairCsvHeader;
void write_pair_dataset(std::ostream& out, const PairDataset& ds);
PairDataset read_pair_dataset(std::istream& in, PlaceboLevel level = {});

}  // namespace bidleak
