#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidleak {

// Errors are split so the CLI can map them to exit codes.
struct DataError : std::runtime_error {
   using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

// Money in kopecks; 1 ruble = 100 kopecks.
using Kopecks = std::int64_t;
constexpr Kopecks kReserveCap = 500000LL * 100;

// Seconds since the Unix epoch, UTC.
using TimePoint = std::int64_t;

std::optional<TimePoint> parse_time(const std::string& s);
std::string format_time(TimePoint t);
// "YYYY-MM" of a time point
std::string month_of(TimePoint t);

struct Bid {
   std::string participant_id;
   Kopecks amount = 0;
   TimePoint submitted_at = 0;
};

struct AuctionRecord {
   std::string auction_id;
   std::string procurer_id;
   Kopecks reserve_price = 0;
   TimePoint announce_at = 0;
   TimePoint deadline_at = 0;
   std::vector<Bid> bids;
   std::optional<std::string> region;
   std::optional<int> commission_size;
};

struct RankedAuction {
   const AuctionRecord* base = nullptr;
   std::vector<std::size_t> ranking;  // ranking[0] is the winner's bid index

   const Bid& at_rank(std::size_t k) const { return base->bids[ranking.at(k)]; }
   std::size_t size() const { return ranking.size(); }
};

struct Reject {
   std::size_t line = 0;  // 1-based physical line of the row start
   std::string reason;
   std::string raw;
};

struct ParseResult {
   std::vector<AuctionRecord> records;
   std::vector<Reject> rejects;
};

extern const char* const kAuctionCsvHeader;

ParseResult parse_auctions(std::istream& in);
void write_auctions(std::ostream& out, const std::vector<AuctionRecord>& records);

struct FilterReport {
   std::map<std::string, std::size_t> dropped;  // rule -> count
   std::size_t kept = 0;
   std::size_t total = 0;

   double retention() const { return total ? double(kept) / double(total) : 0.0; }
   std::string to_json() const;
};

// Rule names in evaluation order.
const std::vector<std::string>& filter_rules();

struct FilterResult {
   std::vector<AuctionRecord> kept;
   FilterReport report;
};

FilterResult validate_and_filter(const std::vector<AuctionRecord>& records, TimePoint now);

RankedAuction rank_auction(const AuctionRecord& record);
std::vector<RankedAuction> rank_all(const std::vector<AuctionRecord>& records);

struct Summary {
   double mean = 0, median = 0, std = 0;
   std::size_t count = 0;
};

Summary summarize(std::vector<double> xs);

struct DatasetStats {
   Summary participants;
   Summary reserve_price;      // rubles
   Summary winner_bid;         // rubles
   Summary runnerup_bid;       // rubles
   Summary price_fall;
   Summary minutes_to_deadline_all;
   Summary minutes_to_deadline_winner;
   Summary minutes_to_deadline_runnerup;
   Summary duration_hours;

   std::string to_json() const;
};

DatasetStats compute_stats(const std::vector<AuctionRecord>& records);

}  // namespace bidleak
