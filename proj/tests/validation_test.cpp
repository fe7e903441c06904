#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bidleak/report.hpp"
#include "bidleak/simulator.hpp"
#include "bidleak/validation.hpp"

using namespace bidleak;

namespace {

// bids given in rank order as submission times; amounts rise with rank
AuctionRecord by_rank_times(const std::string& id, std::vector<TimePoint> times) {
   AuctionRecord a;
   a.auction_id = id;
   a.procurer_id = "Q";
   a.reserve_price = 100000;
   a.announce_at = 0;
   a.deadline_at = 1000;
   for (std::size_t k = 0; k < times.size(); ++k)
      a.bids.push_back({"P" + std::to_string(k), Kopecks(50000 + 1000 * k), times[k]});
   return a;
}

std::vector<AuctionRecord> clean() {
   std::ifstream in(FIXTURE_DIR "/clean.csv");
   return parse_auctions(in).records;
}

}  // namespace

TEST(Independence, HandBuiltCorpus) {
   const std::vector<AuctionRecord> recs = {
       by_rank_times("T1", {50, 40, 30, 10}),   // winner last: skipped by (a)
       by_rank_times("T2", {10, 20, 30}),       // last is the bottom bid
       by_rank_times("T3", {5, 30, 30}),        // tied last: skipped by (a), half in (b)
       by_rank_times("T4", {1, 2}),             // too short for everything
       by_rank_times("T5", {1, 100, 50, 20})};  // last is the runner-up
   const auto rep = independence_check(rank_all(recs));

   EXPECT_EQ(rep.last_vs_rank.n, 2u);
   EXPECT_DOUBLE_EQ(rep.last_vs_rank.fraction, 0.5);
   EXPECT_DOUBLE_EQ(rep.last_vs_rank.correlation, 0.0);

   // T1: 1, T2: 0, T3: 1/2, T5: 1
   EXPECT_EQ(rep.second_vs_third.n, 4u);
   EXPECT_DOUBLE_EQ(rep.second_vs_third.fraction, 2.5 / 4);
   EXPECT_DOUBLE_EQ(rep.second_vs_third.correlation, 0.25);
   EXPECT_DOUBLE_EQ(rep.second_vs_third.z, 0.5);
   EXPECT_NEAR(rep.second_vs_third.p_value, std::erfc(0.5 / std::sqrt(2.0)), 1e-15);

   EXPECT_EQ(rep.third_vs_fourth.n, 2u);
   EXPECT_DOUBLE_EQ(rep.third_vs_fourth.fraction, 1.0);
}

TEST(Independence, UnavailableWhenTooShort) {
   const auto rep = independence_check(rank_all({by_rank_times("T", {1, 2})}));
   EXPECT_FALSE(rep.last_vs_rank.available);
   EXPECT_FALSE(rep.second_vs_third.available);
   EXPECT_FALSE(rep.third_vs_fourth.available);
   const auto j = nlohmann::json::parse(rep.to_json());
   EXPECT_FALSE(j.at("second_vs_third").at("available").get<bool>());
}

TEST(Sniper, Examples) {
   AuctionRecord a = by_rank_times("S", {});
   a.deadline_at = 7 * 86400;
   a.reserve_price = 10000;
   a.bids = {{"A", 9700, 3600}, {"B", 9700, 30 * 3600}, {"C", 9400, 3600}, {"D", 9500, 86400}};
   EXPECT_DOUBLE_EQ(sniper_share(rank_all({a})), 0.5);  // A and D only

   a.bids = {{"A", 10000, 0}, {"B", 10000, 100}};
   EXPECT_DOUBLE_EQ(sniper_share(rank_all({a})), 1.0);

   EXPECT_THROW(sniper_share({}), DataError);
   // clean fixture: P7 bid the C3 reserve after 30 min, P4 bid 95% of C2's after 12h
   EXPECT_DOUBLE_EQ(sniper_share(rank_all(clean())), 2.0 / 9);
}

TEST(Parity, VerdictsAndJson) {
   ParityReport r;
   r.level[0].roc_auc = 0.65;
   r.level[1].roc_auc = 0.53;
   r.level[2].roc_auc = 0.54;
   EXPECT_EQ(r.parity_verdict(), "parity");
   EXPECT_TRUE(r.leakage_evidence());
   r.level[2].roc_auc = 0.56;
   EXPECT_EQ(r.parity_verdict(), "no_parity");
   r.level[0].roc_auc = 0.55;
   EXPECT_FALSE(r.leakage_evidence());
   r.level2_available = false;
   EXPECT_EQ(r.parity_verdict(), "insufficient data");
   const auto j = nlohmann::json::parse(r.to_json());
   EXPECT_TRUE(j.at("levels")[2].is_null());
   EXPECT_EQ(j.at("parity_verdict"), "insufficient data");
}

TEST(Parity, CheckOnSmallCorpus) {
   SimConfig sc;
   sc.n_auctions = 3000;
   sc.true_alpha = 0.5;
   const auto recs = generate_dataset(sc).records();
   const auto ranked = rank_all(recs);
   const auto h = build_history_index(recs);
   TrainConfig tc;
   tc.n_repeats = 1;
   const auto rep = parity_check(build_pair_dataset(ranked, {0}, h), build_pair_dataset(ranked, {1}, h),
                                 build_pair_dataset(ranked, {2}, h), tc);
   EXPECT_TRUE(rep.level2_available);
   EXPECT_TRUE(rep.leakage_evidence());  // half the winners are snipers
   const auto no2 = parity_check(build_pair_dataset(ranked, {0}, h), build_pair_dataset(ranked, {1}, h),
                                 PairDataset{}, tc);
   EXPECT_FALSE(no2.level2_available);
}

TEST(Report, GroupingsOnCleanFixture) {
   const auto recs = clean();
   const std::vector<PosteriorRow> post = {{"C1", 0.9, 0.6}, {"C2", 0.5, 0.0}, {"C3", 0.7, 0.3}};

   auto labels = [&](const std::string& key) {
      std::vector<std::pair<std::string, std::size_t>> out;
      std::size_t total = 0;
      for (const auto& g : aggregate_alpha(post, recs, key).groups) {
         out.emplace_back(g.key, g.count);
         total += g.count;
      }
      EXPECT_EQ(total, 3u) << key;
      return out;
   };
   using V = std::vector<std::pair<std::string, std::size_t>>;
   EXPECT_EQ(labels("n_participants"), (V{{"2", 1}, {"3", 1}, {"4", 1}}));
   EXPECT_EQ(labels("month"), (V{{"2016-03", 1}, {"2016-04", 1}, {"2017-01", 1}}));
   EXPECT_EQ(labels("region"), (V{{"(none)", 1}, {"Moscow, Central", 1}, {"Tver", 1}}));
   EXPECT_EQ(labels("commission_size"), (V{{"(none)", 1}, {"3", 1}, {"5", 1}}));
   EXPECT_EQ(labels("price_fall"), (V{{"[0.20,0.25)", 2}, {"[0.25,0.30)", 1}}));
   EXPECT_EQ(labels("winner_timing"), (V{{"0-1h", 2}, {"1-2h", 1}}));
   EXPECT_EQ(labels("reserve_decile").size(), 3u);

   const auto t = aggregate_alpha(post, recs, "price_fall");
   EXPECT_DOUBLE_EQ(t.groups[0].mean_posterior, 0.45);
   EXPECT_DOUBLE_EQ(t.groups[1].mean_posterior, 0.0);
}

TEST(Report, ReserveDecilesOnLargerCorpus) {
   SimConfig sc;
   sc.n_auctions = 2000;
   const auto recs = generate_dataset(sc).records();
   std::vector<PosteriorRow> post;
   for (const auto& r : recs) post.push_back({r.auction_id, 0.5, 0.1});
   const auto t = aggregate_alpha(post, recs, "reserve_decile");
   ASSERT_EQ(t.groups.size(), 10u);
   for (std::size_t d = 0; d < 10; ++d) {
      EXPECT_EQ(t.groups[d].key, "D" + std::to_string(d + 1));
      EXPECT_NEAR(double(t.groups[d].count), 200, 20);
      EXPECT_NEAR(t.groups[d].mean_posterior, 0.1, 1e-15);
   }
}

TEST(Report, Errors) {
   const auto recs = clean();
   try {
      aggregate_alpha({}, recs, "colour");
      FAIL() << "expected ConfigError";
   } catch (const ConfigError& e) {
      const std::string msg = e.what();
      for (const auto& k : grouping_keys()) EXPECT_NE(msg.find(k), std::string::npos) << k;
   }
   EXPECT_THROW(aggregate_alpha({{"nope", 0.5, 0.5}}, recs, "region"), DataError);
}

TEST(Report, CsvFormats) {
   const std::vector<PosteriorRow> post = {{"C1", 0.9, 0.6}, {"C,2", 0.5, 1.0 / 3}};
   std::ostringstream out;
   write_posteriors(out, post);
   std::istringstream in(out.str());
   const auto back = read_posteriors(in);
   ASSERT_EQ(back.size(), 2u);
   EXPECT_EQ(back[1].auction_id, "C,2");
   EXPECT_EQ(back[1].posterior, 1.0 / 3);

   std::ostringstream rep;
   write_report(rep, aggregate_alpha({{"C1", 0.9, 0.6}}, clean(), "region"));
   EXPECT_EQ(rep.str(), "grouping,group,count,mean_posterior\nregion,(none),1,0.600000\n");
}
