#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "bidleak/cv.hpp"
#include "bidleak/gbt.hpp"

using namespace bidleak;

namespace {

// two rows per auction, winner first; features drawn by `gen`
PairDataset make_pairs(std::size_t n_auctions, std::uint64_t seed,
                       const std::function<Row(int label, std::mt19937_64&)>& gen) {
   std::mt19937_64 rng(seed);
   PairDataset ds;
   for (std::size_t a = 0; a < n_auctions; ++a) {
      for (int label : {1, 0}) {
         const Row r = gen(label, rng);
         FeatureVector fv{r[0], r[1], r[2], r[3], r[4], r[5]};
         ds.rows.push_back({"A" + std::to_string(a), label, fv});
      }
   }
   return ds;
}

Row noise(int, std::mt19937_64& rng) {
   std::uniform_real_distribution<double> u(0, 1);
   return {u(rng), double(rng() & 1), u(rng) * 1440, u(rng) * 0.1, u(rng) * 1440, double(2 + rng() % 5)};
}

// brute-force pairwise AUC oracle
double auc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
   double num = 0, den = 0;
   for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
         if (y[i] == 1 && y[j] == 0) {
            den += 1;
            num += s[i] > s[j] ? 1 : s[i] == s[j] ? 0.5 : 0;
         }
   return num / den;
}

}  // namespace

TEST(Metrics, TrivialPoints) {
   EXPECT_EQ(roc_auc({0.9, 0.1}, {1, 0}), 1.0);
   EXPECT_EQ(accuracy({0.9, 0.1}, {1, 0}), 1.0);
   EXPECT_EQ(roc_auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}), 0.5);
   EXPECT_EQ(roc_auc({0.1, 0.9}, {1, 0}), 0.0);
   // y = 0.5 counts as label 0
   EXPECT_EQ(accuracy({0.5, 0.5}, {1, 0}), 0.5);
   EXPECT_THROW(roc_auc({0.1, 0.2}, {1, 1}), DataError);
}

TEST(Metrics, AucMatchesPairwiseOracleAndIsRankInvariant) {
   std::mt19937_64 rng(3);
   std::vector<double> s;
   std::vector<int> y;
   for (int i = 0; i < 400; ++i) {
      y.push_back(int(rng() % 2));
      s.push_back(double(rng() % 20 + std::uint64_t(y.back())));  // exact, with many ties
   }
   EXPECT_NEAR(roc_auc(s, y), auc_oracle(s, y), 1e-12);
   std::vector<double> t;
   for (double v : s) t.push_back(std::exp(0.1 * v) - 7);
   EXPECT_NEAR(roc_auc(t, y), roc_auc(s, y), 1e-12);
}

TEST(Gbt, ConfigValidation) {
   TrainConfig c;
   EXPECT_NO_THROW(c.validate());
   c.max_depth = 13;
   EXPECT_THROW(c.validate(), ConfigError);
   c = {};
   c.learning_rate = 0;
   EXPECT_THROW(c.validate(), ConfigError);
   c = {};
   c.n_folds = 1;
   EXPECT_THROW(c.validate(), ConfigError);
   c = {};
   c.n_trees = 0;
   EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Gbt, RejectsDegenerateInput) {
   TrainConfig c;
   EXPECT_THROW(train_gbt(std::vector<Row>{}, {}, c), DataError);
   EXPECT_THROW(train_gbt(std::vector<Row>(4, Row{}), {1, 1, 1, 1}, c), DataError);
}

TEST(Gbt, SeparableReachesPerfectAccuracy) {
   TrainConfig c;
   c.min_samples_leaf = 5;
   const auto ds = make_pairs(200, 1, [](int label, std::mt19937_64&) {
      return Row{double(label), 0, 0, 0, 0, 2};
   });
   const auto m = train_gbt(ds, c);
   std::vector<double> p;
   for (const auto& r : ds.rows) p.push_back(m.predict(r.features));
   EXPECT_EQ(accuracy(p, labels_of(ds)), 1.0);
   EXPECT_LT(m.train_loss.back(), 0.05);
   for (const auto& t : m.trees) EXPECT_LE(t.depth(), c.max_depth);
}

TEST(Gbt, ConstantFeaturesPredictBaseRate) {
   TrainConfig c;
   const auto ds = make_pairs(100, 1, [](int, std::mt19937_64&) { return Row{1, 1, 1, 1, 1, 1}; });
   const auto m = train_gbt(ds, c);
   EXPECT_EQ(m.initial_score, 0);
   EXPECT_DOUBLE_EQ(m.predict(Row{1, 1, 1, 1, 1, 1}), 0.5);
   EXPECT_DOUBLE_EQ(m.predict(Row{9, 0, 3, 0, 7, 4}), 0.5);
   GBTModel empty;
   EXPECT_EQ(empty.predict(Row{}), 0.5);
}

TEST(Gbt, TrainingLossNonIncreasing) {
   TrainConfig c;
   const auto ds = make_pairs(1500, 2, [](int label, std::mt19937_64& rng) {
      auto r = noise(label, rng);
      r[3] = std::min(0.1, r[3] * (label ? 0.6 : 1.0));
      return r;
   });
   const auto m = train_gbt(ds, c);
   ASSERT_EQ(m.train_loss.size(), std::size_t(c.n_trees) + 1);
   for (std::size_t i = 1; i < m.train_loss.size(); ++i) EXPECT_LE(m.train_loss[i], m.train_loss[i - 1]);
   std::vector<double> p;
   for (const auto& r : ds.rows) p.push_back(m.predict(r.features));
   EXPECT_NEAR(log_loss(p, labels_of(ds)), m.train_loss.back(), 1e-9);
}

TEST(Gbt, MonotoneConstructedModel) {
   GBTModel m;
   m.learning_rate = 0.1;
   std::mt19937_64 rng(4);
   std::uniform_real_distribution<double> u(0, 1);
   for (int k = 0; k < 25; ++k) {
      Tree t;
      const double lo = u(rng), hi = lo + u(rng);
      t.nodes = {{0, u(rng), 1, 2, 0}, {-1, 0, -1, -1, lo}, {-1, 0, -1, -1, hi}};
      m.trees.push_back(t);
   }
   double prev = 0;
   for (int i = 0; i <= 1000; ++i) {
      const double p = m.predict(Row{i / 1000.0, 0, 0, 0, 0, 0});
      EXPECT_GE(p, prev);
      EXPECT_GT(p, 0);
      EXPECT_LT(p, 1);
      prev = p;
   }
}

TEST(Gbt, JsonRoundTripIsBitExact) {
   const auto ds = make_pairs(800, 5, noise);
   const auto m = train_gbt(ds, TrainConfig{});
   const auto text = m.to_json();
   const auto back = GBTModel::from_json(text);
   EXPECT_EQ(back.to_json(), text);
   for (const auto& r : ds.rows) EXPECT_EQ(back.predict(r.features), m.predict(r.features));
   EXPECT_THROW(GBTModel::from_json("{}"), DataError);
   EXPECT_THROW(GBTModel::from_json("not json"), DataError);
}

TEST(Gbt, DeterministicTraining) {
   const auto ds = make_pairs(600, 6, noise);
   EXPECT_EQ(train_gbt(ds, TrainConfig{}).to_json(), train_gbt(ds, TrainConfig{}).to_json());
}

TEST(Cv, NoiseIsChanceOutOfFold) {
   // 10,000 rows; a binomial 99.9% interval on 10k trials is about +-0.017
   const auto ds = make_pairs(5000, 7, noise);
   const auto cv = cross_val_predict(ds, TrainConfig{});
   const auto m = evaluate(cv.oof);
   EXPECT_NEAR(m.accuracy, 0.5, 0.02);
   EXPECT_NEAR(m.roc_auc, 0.5, 0.02);
}

TEST(Cv, FairWorldAucNearHalf) {
   const auto ds = make_pairs(10000, 8, noise);
   TrainConfig c;
   c.n_repeats = 1;
   const auto m = evaluate(cross_val_predict(ds, c).oof);
   EXPECT_GE(m.roc_auc, 0.48);
   EXPECT_LE(m.roc_auc, 0.52);
}

TEST(Cv, GroupedFoldsAndHeldOutScoring) {
   const auto ds = make_pairs(300, 9, noise);
   TrainConfig c;
   c.min_samples_leaf = 10;
   const auto cv = cross_val_predict(ds, c);
   ASSERT_EQ(cv.oof.fold.size(), std::size_t(c.n_repeats));
   ASSERT_EQ(cv.oof.by_repeat.size(), std::size_t(c.n_repeats));
   for (std::size_t rep = 0; rep < cv.oof.fold.size(); ++rep) {
      std::map<std::string, std::set<int>> folds;
      std::map<int, std::size_t> sizes;
      for (std::size_t i = 0; i < ds.rows.size(); ++i) {
         folds[ds.rows[i].auction_id].insert(cv.oof.fold[rep][i]);
         ++sizes[cv.oof.fold[rep][i]];
      }
      for (const auto& [id, f] : folds) EXPECT_EQ(f.size(), 1u) << id;
      EXPECT_EQ(sizes.size(), 3u);
      for (const auto& [f, n] : sizes) EXPECT_EQ(n, 200u);
      // the repeat's fold model equals a model trained on the other folds
      if (rep == 0) {
         const int held = cv.oof.fold[0][0];
         PairDataset train;
         for (std::size_t i = 0; i < ds.rows.size(); ++i)
            if (cv.oof.fold[0][i] != held) train.rows.push_back(ds.rows[i]);
         const auto m = train_gbt(train, c);
         EXPECT_DOUBLE_EQ(cv.oof.by_repeat[0][0], m.predict(ds.rows[0].features));
      }
   }
   // repeats use different shuffles
   EXPECT_NE(cv.oof.fold[0], cv.oof.fold[1]);
   for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      double mean = 0;
      for (const auto& r : cv.oof.by_repeat) mean += r[i];
      EXPECT_NEAR(cv.oof.y[i], mean / double(cv.oof.by_repeat.size()), 1e-15);
   }
}

TEST(Cv, ThreeAuctionsLeaveOneOut) {
   const auto ds = make_pairs(3, 1, noise);
   TrainConfig c;
   c.n_repeats = 1;
   const auto cv = cross_val_predict(ds, c);
   std::set<int> f(cv.oof.fold[0].begin(), cv.oof.fold[0].end());
   EXPECT_EQ(f.size(), 3u);
   const auto two = make_pairs(2, 1, noise);
   EXPECT_THROW(cross_val_predict(two, c), DataError);
}

TEST(Cv, AppliedDatasetsUseHeldOutModels) {
   const auto ds = make_pairs(300, 10, noise);
   PairDataset other = make_pairs(300, 11, noise);
   other.rows.erase(other.rows.begin() + 100, other.rows.end());  // auctions A0..A49
   TrainConfig c;
   c.min_samples_leaf = 10;
   c.n_repeats = 1;
   const auto cv = cross_val_predict(ds, c, {&other});
   ASSERT_EQ(cv.applied.size(), 1u);
   ASSERT_EQ(cv.applied[0].size(), other.rows.size());
   for (std::size_t i = 0; i < other.rows.size(); ++i) {
      // fold of this auction in the training set
      const auto it = std::find_if(ds.rows.begin(), ds.rows.end(),
                                   [&](const PairRow& r) { return r.auction_id == other.rows[i].auction_id; });
      EXPECT_EQ(cv.applied[0].fold[0][i], cv.oof.fold[0][std::size_t(it - ds.rows.begin())]);
   }
}

TEST(Cv, DeterministicAndCsvRoundTrip) {
   const auto ds = make_pairs(400, 12, noise);
   const auto a = cross_val_predict(ds, TrainConfig{});
   const auto b = cross_val_predict(ds, TrainConfig{});
   EXPECT_EQ(a.oof.y, b.oof.y);
   TrainConfig other;
   other.seed = 99;
   EXPECT_NE(cross_val_predict(ds, other).oof.fold, a.oof.fold);

   std::ostringstream out;
   write_predictions(out, {&a.oof});
   std::istringstream in(out.str());
   const auto back = read_predictions(in);
   ASSERT_EQ(back.size(), 1u);
   EXPECT_EQ(back[0].y, a.oof.y);
   EXPECT_EQ(back[0].label, a.oof.label);
   EXPECT_EQ(back[0].auction_id, a.oof.auction_id);
}
