#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bidleak/core.hpp"

namespace bidleak {

struct PosteriorRow {
   std::string auction_id;
   double y = 0;
   double posterior = 0;
};

void write_posteriors(std::ostream& out, const std::vector<PosteriorRow>& rows);
std::vector<PosteriorRow> read_posteriors(std::istream& in);

struct ReportGroup {
   std::string key;
   std::size_t count = 0;
   double mean_posterior = 0;
};

struct ReportTable {
   std::string grouping;
   std::vector<ReportGroup> groups;  // in bin order
};

const std::vector<std::string>& grouping_keys();

// Bins: reserve deciles of the scored corpus, price fall in 0.05 steps, the
// winner's minutes to deadline in 1h steps over the last day (plus ">=24h").
ReportTable aggregate_alpha(const std::vector<PosteriorRow>& posteriors,
                            const std::vector<AuctionRecord>& auctions, const std::string& grouping);

void write_report(std::ostream& out, const ReportTable& t);

}  // namespace bidleak
