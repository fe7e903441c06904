#include "bidleak/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "bidleak/csv.hpp"

namespace bidleak {

void write_posteriors(std::ostream& out, const std::vector<PosteriorRow>& rows) {
   out << "auction_id,y,posterior\n";
   char y[32], p[32];
   for (const auto& r : rows) {
      std::snprintf(y, sizeof y, "%.17g", r.y);
      std::snprintf(p, sizeof p, "%.17g", r.posterior);
      csv::write_row(out, {r.auction_id, y, p});
   }
}

std::vector<PosteriorRow> read_posteriors(std::istream& in) {
   std::vector<std::string> f;
   std::size_t lines = 0;
   std::string raw;
   if (!csv::read_row(in, f, lines, &raw) || raw != "auction_id,y,posterior")
      throw DataError("posteriors: unexpected header");
   std::vector<PosteriorRow> out;
   while (csv::read_row(in, f, lines)) {
      if (f.empty()) continue;
      if (f.size() != 3) throw DataError("posteriors: bad row at line " + std::to_string(lines));
      try {
         out.push_back({f[0], std::stod(f[1]), std::stod(f[2])});
      } catch (const std::exception&) {
         throw DataError("posteriors: bad number at line " + std::to_string(lines));
      }
   }
   return out;
}

const std::vector<std::string>& grouping_keys() {
   static const std::vector<std::string> keys = {"reserve_decile", "n_participants", "month",
                                                 "price_fall",     "commission_size", "region",
                                                 "winner_timing"};
   return keys;
}

namespace {

std::string fmt2(const char* pattern, double a, double b) {
   char buf[64];
   std::snprintf(buf, sizeof buf, pattern, a, b);
   return buf;
}

}  // namespace

ReportTable aggregate_alpha(const std::vector<PosteriorRow>& posteriors,
                            const std::vector<AuctionRecord>& auctions, const std::string& grouping) {
   const auto& keys = grouping_keys();
   if (std::find(keys.begin(), keys.end(), grouping) == keys.end()) {
      std::string valid;
      for (const auto& k : keys) valid += (valid.empty() ? "" : ", ") + k;
      throw ConfigError("unknown grouping '" + grouping + "'; valid keys: " + valid);
   }
   std::unordered_map<std::string, const AuctionRecord*> by_id;
   for (const auto& a : auctions) by_id[a.auction_id] = &a;

   // (sort key, label) per scored auction
   struct Item {
      double order;
      std::string label;
      double post;
   };
   std::vector<Item> items;
   items.reserve(posteriors.size());

   std::vector<double> edges;
   if (grouping == "reserve_decile") {
      std::vector<double> rs;
      for (const auto& p : posteriors) {
         auto it = by_id.find(p.auction_id);
         if (it == by_id.end()) throw DataError("report: no auction for " + p.auction_id);
         rs.push_back(double(it->second->reserve_price) / 100.0);
      }
      std::sort(rs.begin(), rs.end());
      for (int k = 1; k < 10 && !rs.empty(); ++k) {
         const double pos = k / 10.0 * double(rs.size() - 1);
         const auto i = std::size_t(pos);
         edges.push_back(i + 1 < rs.size() ? rs[i] + (pos - double(i)) * (rs[i + 1] - rs[i]) : rs.back());
      }
   }

   for (const auto& p : posteriors) {
      auto it = by_id.find(p.auction_id);
      if (it == by_id.end()) throw DataError("report: no auction for " + p.auction_id);
      const AuctionRecord& a = *it->second;
      Item item{0, "", p.posterior};
      if (grouping == "n_participants") {
         item.order = double(a.bids.size());
         item.label = std::to_string(a.bids.size());
      } else if (grouping == "month") {
         item.label = month_of(a.announce_at);
      } else if (grouping == "region") {
         item.label = a.region.value_or("(none)");
      } else if (grouping == "commission_size") {
         item.order = a.commission_size ? *a.commission_size : -1;
         item.label = a.commission_size ? std::to_string(*a.commission_size) : "(none)";
      } else if (grouping == "reserve_decile") {
         const double r = double(a.reserve_price) / 100.0;
         // bin d holds edges[d-1] < r <= edges[d]
         const auto d = std::size_t(std::lower_bound(edges.begin(), edges.end(), r) - edges.begin());
         item.order = double(d);
         item.label = "D" + std::to_string(d + 1);
      } else {
         const auto ra = rank_auction(a);
         if (grouping == "price_fall") {
            const double pf = double(a.reserve_price - ra.at_rank(0).amount) / double(a.reserve_price);
            const int bin = std::min(19, int(std::floor(pf / 0.05 + 1e-12)));
            item.order = bin;
            item.label = fmt2("[%.2f,%.2f)", bin * 0.05, (bin + 1) * 0.05);
         } else {  // winner_timing
            const double minutes = double(a.deadline_at - ra.at_rank(0).submitted_at) / 60.0;
            if (minutes >= 24 * 60) {
               item.order = 24;
               item.label = ">=24h";
            } else {
               const int h = int(minutes / 60);
               item.order = h;
               item.label = fmt2("%.0f-%.0fh", h, h + 1);
            }
         }
      }
      items.push_back(std::move(item));
   }

   std::map<std::pair<double, std::string>, std::pair<std::size_t, double>> acc;
   for (const auto& it : items) {
      auto& slot = acc[{it.order, it.label}];
      slot.first++;
      slot.second += it.post;
   }
   ReportTable t;
   t.grouping = grouping;
   for (const auto& [k, v] : acc) t.groups.push_back({k.second, v.first, v.second / double(v.first)});
   return t;
}

void write_report(std::ostream& out, const ReportTable& t) {
   out << "grouping,group,count,mean_posterior\n";
   char buf[32];
   for (const auto& g : t.groups) {
      std::snprintf(buf, sizeof buf, "%.6f", g.mean_posterior);
      csv::write_row(out, {t.grouping, g.key, std::to_string(g.count), buf});
   }
}

}  // namespace bidleak
