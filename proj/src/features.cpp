#include "bidleak/features.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bidleak/csv.hpp"

namespace bidleak {

const std::array<const char*, FeatureVector::kSize>& FeatureVector::names() {
   static const std::array<const char*, kSize> n = {
       "bid_last", "met_before", "bid_timing", "relative_bid", "relative_bid_timing",
       "n_participants"};
   return n;
}

void HistoryIndex::add(const std::string& procurer, const std::string& participant, TimePoint at) {
   times_[{procurer, participant}].push_back(at);
}

void HistoryIndex::finalize() {
   for (auto& [k, v] : times_) std::sort(v.begin(), v.end());
}

bool HistoryIndex::met_before(const std::string& procurer, const std::string& participant,
                              TimePoint t) const {
   auto it = times_.find({procurer, participant});
   if (it == times_.end()) return false;
   const auto& v = it->second;
   return std::lower_bound(v.begin(), v.end(), t) != v.begin();
}

HistoryIndex build_history_index(const std::vector<AuctionRecord>& records) {
   HistoryIndex h;
   for (const auto& r : records)
      for (const auto& b : r.bids) h.add(r.procurer_id, b.participant_id, r.announce_at);
   h.finalize();
   return h;
}

FeatureVector extract_features(const RankedAuction& auction, std::size_t rank,
                               const HistoryIndex& history, int drop_count) {
   if (drop_count < 0 || std::size_t(drop_count) >= auction.size())
      throw std::out_of_range("extract_features: drop count out of range");
   const std::size_t n = auction.size() - std::size_t(drop_count);
   if (rank < 1 || rank > n) throw std::out_of_range("extract_features: rank out of range");

   const AuctionRecord& rec = *auction.base;
   auto bid_at = [&](std::size_t k) -> const Bid& { return auction.at_rank(drop_count + k - 1); };
   const Bid& me = bid_at(rank);
   const double reserve = double(rec.reserve_price);

   FeatureVector fv;
   fv.n_participants = double(n);
   fv.met_before = history.met_before(rec.procurer_id, me.participant_id, rec.announce_at) ? 1 : 0;
   fv.bid_timing =
       std::min(kTimingCapMinutes, double(rec.deadline_at - me.submitted_at) / 60.0);

   Kopecks next = rank < n ? bid_at(rank + 1).amount : rec.reserve_price;
   fv.relative_bid = std::min(kRelativeBidCap, double(next - me.amount) / reserve);

   bool last = true;
   const Bid* prev_min = nullptr;
   for (std::size_t k = 1; k <= n; ++k) {
      if (k == rank) continue;
      const Bid& o = bid_at(k);
      if (o.submitted_at >= me.submitted_at) last = false;
      // ranks are ascending, so the first earlier bid met is the running minimum
      if (o.submitted_at < me.submitted_at && !prev_min) prev_min = &o;
   }
   fv.bid_last = last ? 1 : 0;
   fv.relative_bid_timing =
       prev_min ? std::min(kTimingCapMinutes, double(me.submitted_at - prev_min->submitted_at) / 60.0)
                : kTimingCapMinutes;
   return fv;
}

PairDataset build_pair_dataset(const std::vector<RankedAuction>& auctions, PlaceboLevel level,
                               const HistoryIndex& history) {
   PairDataset ds;
   ds.level = level;
   for (const auto& a : auctions) {
      if (a.size() < std::size_t(level.drop_count) + 2) {
         ++ds.skipped;
         continue;
      }
      ds.rows.push_back({a.base->auction_id, 1, extract_features(a, 1, history, level.drop_count)});
      ds.rows.push_back({a.base->auction_id, 0, extract_features(a, 2, history, level.drop_count)});
   }
   return ds;
}

const char* const kPairCsvHeader =
    "auction_id,label,bid_last,met_before,bid_timing,relative_bid,relative_bid_timing,"
    "n_participants";

namespace {
std::string num(double x) {
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", x);
   return buf;
}
}  // namespace

void write_pair_dataset(std::ostream& out, const PairDataset& ds) {
   out << kPairCsvHeader << '\n';
   for (const auto& r : ds.rows) {
      std::vector<std::string> f = {r.auction_id, std::to_string(r.label)};
      for (double v : r.features.values()) f.push_back(num(v));
      csv::write_row(out, f);
   }
}

PairDataset read_pair_dataset(std::istream& in, PlaceboLevel level) {
   PairDataset ds;
   ds.level = level;
   std::vector<std::string> f;
   std::size_t lines = 0;
   std::string raw;
   if (!csv::read_row(in, f, lines, &raw) || raw != kPairCsvHeader)
      throw DataError("pair dataset: unexpected header");
   while (csv::read_row(in, f, lines)) {
      if (f.empty()) continue;
      if (f.size() != 8) throw DataError("pair dataset: bad row at line " + std::to_string(lines));
      PairRow r;
      r.auction_id = f[0];
      try {
         r.label = std::stoi(f[1]);
         r.features.bid_last = std::stod(f[2]);
         r.features.met_before = std::stod(f[3]);
         r.features.bid_timing = std::stod(f[4]);
         r.features.relative_bid = std::stod(f[5]);
         r.features.relative_bid_timing = std::stod(f[6]);
         r.features.n_participants = std::stod(f[7]);
      } catch (const std::exception&) {
         throw DataError("pair dataset: bad number at line " + std::to_string(lines));
      }
      ds.rows.push_back(std::move(r));
   }
   return ds;
}

}  // namespace bidleak
