#include "bidleak/core.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "bidleak/csv.hpp"

namespace bidleak {

using json = nlohmann::json;
namespace chr = std::chrono;

const char* const kAuctionCsvHeader =
    "auction_id,procurer_id,reserve_price_kopecks,announce_at,deadline_at,participant_id,"
    "bid_kopecks,submitted_at,region,commission_size";

namespace {

bool parse_int(const std::string& s, std::int64_t& out) {
   if (s.empty()) return false;
   const char* b = s.data();
   const char* e = s.data() + s.size();
   if (*b == '+') ++b;
   auto [p, ec] = std::from_chars(b, e, out);
   return ec == std::errc() && p == e;
}

bool digits(const std::string& s, std::size_t pos, std::size_t n) {
   if (pos + n > s.size()) return false;
   for (std::size_t i = pos; i < pos + n; ++i)
      if (s[i] < '0' || s[i] > '9') return false;
   return true;
}

int num(const std::string& s, std::size_t pos, std::size_t n) {
   return std::stoi(s.substr(pos, n));
}

}  // namespace

// Accepts YYYY-MM-DDTHH:MM[:SS]Z.
std::optional<TimePoint> parse_time(const std::string& s) {
   if (s.size() != 17 && s.size() != 20) return std::nullopt;
   if (!digits(s, 0, 4) || s[4] != '-' || !digits(s, 5, 2) || s[7] != '-' || !digits(s, 8, 2) ||
       s[10] != 'T' || !digits(s, 11, 2) || s[13] != ':' || !digits(s, 14, 2))
      return std::nullopt;
   int sec = 0;
   if (s.size() == 20) {
      if (s[16] != ':' || !digits(s, 17, 2) || s[19] != 'Z') return std::nullopt;
      sec = num(s, 17, 2);
   } else if (s[16] != 'Z') {
      return std::nullopt;
   }
   chr::year_month_day ymd{chr::year{num(s, 0, 4)}, chr::month{unsigned(num(s, 5, 2))},
                           chr::day{unsigned(num(s, 8, 2))}};
   int hh = num(s, 11, 2), mm = num(s, 14, 2);
   if (!ymd.ok() || hh > 23 || mm > 59 || sec > 59) return std::nullopt;
   auto days = chr::sys_days(ymd).time_since_epoch().count();
   return TimePoint(days) * 86400 + hh * 3600 + mm * 60 + sec;
}

std::string format_time(TimePoint t) {
   auto days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
   auto rem = t - days * 86400;
   chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
   char buf[32];
   std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                 unsigned(ymd.month()), unsigned(ymd.day()), int(rem / 3600), int(rem / 60 % 60),
                 int(rem % 60));
   return buf;
}

std::string month_of(TimePoint t) { return format_time(t).substr(0, 7); }

ParseResult parse_auctions(std::istream& in) {
   if (!in) throw std::runtime_error("cannot read auction stream");
   ParseResult res;
   std::vector<std::string> f;
   std::size_t lines = 0;

   std::string header_raw;
   bool have_header = false;
   try {
      have_header = csv::read_row(in, f, lines, &header_raw);
   } catch (const std::runtime_error&) {
   }
   if (!have_header) throw DataError("schema error: missing header");
   if (header_raw.rfind("\xEF\xBB\xBF", 0) == 0) header_raw.erase(0, 3);
   if (header_raw != kAuctionCsvHeader) throw DataError("schema error: unexpected header");

   std::unordered_map<std::string, std::size_t> index;
   std::vector<std::set<std::string>> seen;

   while (true) {
      std::size_t start = lines + 1;
      std::string raw;
      bool ok;
      try {
         ok = csv::read_row(in, f, lines, &raw);
      } catch (const std::runtime_error&) {
         res.rejects.push_back({start, "bad_quoting", raw});
         break;
      }
      if (!ok) break;
      if (f.empty()) continue;
      auto reject = [&](const char* why) { res.rejects.push_back({start, why, raw}); };

      if (f.size() != 10) { reject("bad_field_count"); continue; }
      if (f[0].empty() || f[5].empty()) { reject("missing_id"); continue; }
      std::int64_t reserve, amount;
      if (!parse_int(f[2], reserve)) { reject("bad_reserve"); continue; }
      if (!parse_int(f[6], amount)) { reject("bad_amount"); continue; }
      auto ann = parse_time(f[3]), dl = parse_time(f[4]), sub = parse_time(f[7]);
      if (!ann || !dl || !sub) { reject("bad_timestamp"); continue; }
      std::optional<int> commission;
      if (!f[9].empty()) {
         std::int64_t c;
         if (!parse_int(f[9], c) || c <= 0 || c > 1000000) { reject("bad_commission"); continue; }
         commission = int(c);
      }
      std::optional<std::string> region;
      if (!f[8].empty()) region = f[8];

      auto it = index.find(f[0]);
      if (it == index.end()) {
         AuctionRecord rec;
         rec.auction_id = f[0];
         rec.procurer_id = f[1];
         rec.reserve_price = reserve;
         rec.announce_at = *ann;
         rec.deadline_at = *dl;
         rec.region = region;
         rec.commission_size = commission;
         it = index.emplace(f[0], res.records.size()).first;
         res.records.push_back(std::move(rec));
         seen.emplace_back();
      } else {
         const auto& rec = res.records[it->second];
         if (rec.procurer_id != f[1] || rec.reserve_price != reserve || rec.announce_at != *ann ||
             rec.deadline_at != *dl || rec.region != region || rec.commission_size != commission) {
            reject("inconsistent_auction");
            continue;
         }
      }
      if (!seen[it->second].insert(f[5]).second) { reject("duplicate_participant"); continue; }
      res.records[it->second].bids.push_back({f[5], amount, *sub});
   }
   return res;
}

void write_auctions(std::ostream& out, const std::vector<AuctionRecord>& records) {
   out << kAuctionCsvHeader << '\n';
   for (const auto& r : records) {
      for (const auto& b : r.bids) {
         csv::write_row(out, {r.auction_id, r.procurer_id, std::to_string(r.reserve_price),
                              format_time(r.announce_at), format_time(r.deadline_at),
                              b.participant_id, std::to_string(b.amount),
                              format_time(b.submitted_at), r.region.value_or(""),
                              r.commission_size ? std::to_string(*r.commission_size) : ""});
      }
   }
}

const std::vector<std::string>& filter_rules() {
   static const std::vector<std::string> rules = {
       "reserve_nonpositive", "reserve_above_cap", "bad_window",         "future_timestamp",
       "bid_nonpositive",     "bid_above_reserve", "bid_outside_window", "single_participant"};
   return rules;
}

namespace {

const char* first_failing_rule(const AuctionRecord& r, TimePoint now) {
   if (r.reserve_price <= 0) return "reserve_nonpositive";
   if (r.reserve_price > kReserveCap) return "reserve_above_cap";
   if (r.announce_at >= r.deadline_at) return "bad_window";
   bool future = r.announce_at > now || r.deadline_at > now;
   for (const auto& b : r.bids) future = future || b.submitted_at > now;
   if (future) return "future_timestamp";
   for (const auto& b : r.bids)
      if (b.amount <= 0) return "bid_nonpositive";
   for (const auto& b : r.bids)
      if (b.amount > r.reserve_price) return "bid_above_reserve";
   for (const auto& b : r.bids)
      if (b.submitted_at < r.announce_at || b.submitted_at > r.deadline_at)
         return "bid_outside_window";
   if (r.bids.size() < 2) return "single_participant";
   return nullptr;
}

}  // namespace

std::string FilterReport::to_json() const {
   json j = json::object();
   for (const auto& [rule, n] : dropped) j[rule] = n;
   j["kept"] = kept;
   j["total"] = total;
   j["retention"] = retention();
   return j.dump(2);
}

FilterResult validate_and_filter(const std::vector<AuctionRecord>& records, TimePoint now) {
   FilterResult out;
   for (const auto& rule : filter_rules()) out.report.dropped[rule] = 0;
   out.report.total = records.size();
   for (const auto& r : records) {
      if (const char* rule = first_failing_rule(r, now)) {
         ++out.report.dropped[rule];
      } else {
         out.kept.push_back(r);
      }
   }
   out.report.kept = out.kept.size();
   return out;
}

RankedAuction rank_auction(const AuctionRecord& record) {
   if (record.bids.size() < 2)
      throw std::invalid_argument("rank_auction: auction " + record.auction_id +
                                  " has fewer than 2 bids");
   RankedAuction ra;
   ra.base = &record;
   ra.ranking.resize(record.bids.size());
   std::iota(ra.ranking.begin(), ra.ranking.end(), 0);
   const auto& b = record.bids;
   std::sort(ra.ranking.begin(), ra.ranking.end(), [&](std::size_t i, std::size_t j) {
      if (b[i].amount != b[j].amount) return b[i].amount < b[j].amount;
      if (b[i].submitted_at != b[j].submitted_at) return b[i].submitted_at < b[j].submitted_at;
      return b[i].participant_id < b[j].participant_id;
   });
   return ra;
}

std::vector<RankedAuction> rank_all(const std::vector<AuctionRecord>& records) {
   std::vector<RankedAuction> out;
   out.reserve(records.size());
   for (const auto& r : records) out.push_back(rank_auction(r));
   return out;
}

Summary summarize(std::vector<double> xs) {
   Summary s;
   s.count = xs.size();
   if (xs.empty()) return s;
   double sum = 0;
   for (double x : xs) sum += x;
   s.mean = sum / double(xs.size());
   double ss = 0;
   for (double x : xs) ss += (x - s.mean) * (x - s.mean);
   s.std = std::sqrt(ss / double(xs.size()));
   std::sort(xs.begin(), xs.end());
   auto n = xs.size();
   s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
   return s;
}

DatasetStats compute_stats(const std::vector<AuctionRecord>& records) {
   if (records.empty()) throw DataError("empty-stats: no auctions");
   std::vector<double> n, reserve, win, ru, fall, all_ttd, win_ttd, ru_ttd, dur;
   for (const auto& r : records) {
      auto ra = rank_auction(r);
      const auto& w = ra.at_rank(0);
      const auto& s = ra.at_rank(1);
      n.push_back(double(r.bids.size()));
      reserve.push_back(double(r.reserve_price) / 100.0);
      win.push_back(double(w.amount) / 100.0);
      ru.push_back(double(s.amount) / 100.0);
      fall.push_back(double(r.reserve_price - w.amount) / double(r.reserve_price));
      for (const auto& b : r.bids) all_ttd.push_back(double(r.deadline_at - b.submitted_at) / 60.0);
      win_ttd.push_back(double(r.deadline_at - w.submitted_at) / 60.0);
      ru_ttd.push_back(double(r.deadline_at - s.submitted_at) / 60.0);
      dur.push_back(double(r.deadline_at - r.announce_at) / 3600.0);
   }
   DatasetStats st;
   st.participants = summarize(n);
   st.reserve_price = summarize(reserve);
   st.winner_bid = summarize(win);
   st.runnerup_bid = summarize(ru);
   st.price_fall = summarize(fall);
   st.minutes_to_deadline_all = summarize(all_ttd);
   st.minutes_to_deadline_winner = summarize(win_ttd);
   st.minutes_to_deadline_runnerup = summarize(ru_ttd);
   st.duration_hours = summarize(dur);
   return st;
}

std::string DatasetStats::to_json() const {
   auto one = [](const Summary& s) {
      return json{{"mean", s.mean}, {"median", s.median}, {"std", s.std}, {"count", s.count}};
   };
   json j{{"participants", one(participants)},
          {"reserve_price_rubles", one(reserve_price)},
          {"winner_bid_rubles", one(winner_bid)},
          {"runnerup_bid_rubles", one(runnerup_bid)},
          {"price_fall", one(price_fall)},
          {"minutes_to_deadline_all_bids", one(minutes_to_deadline_all)},
          {"minutes_to_deadline_winner", one(minutes_to_deadline_winner)},
          {"minutes_to_deadline_runnerup", one(minutes_to_deadline_runnerup)},
          {"duration_hours", one(duration_hours)}};
   return j.dump(2);
}

}  // namespace bidleak
