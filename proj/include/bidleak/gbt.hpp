#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bidleak/features.hpp"

namespace bidleak {

using Row = std::array<double, FeatureVector::kSize>;

struct TrainConfig {
   int n_trees = 60;
   int max_depth = 5;
   double learning_rate = 0.1;
   int min_samples_leaf = 50;
   int n_folds = 3;
   int n_repeats = 3;
   std::uint64_t seed = 0;

   void validate() const;  // throws ConfigError
};

struct TreeNode {
   int feature = -1;  // -1 marks a leaf
   double threshold = 0;
   int left = -1, right = -1;
   double value = 0;
};

struct Tree {
   std::vector<TreeNode> nodes;  // nodes[0] is the root

   double eval(const Row& x) const;
   int depth() const;
};

struct GBTModel {
   double initial_score = 0;
   double learning_rate = 0.1;
   std::vector<Tree> trees;
   // training log-loss before the first tree and after each tree
   std::vector<double> train_loss;

   double predict(const Row& x) const;
   double predict(const FeatureVector& fv) const { return predict(fv.values()); }

   std::string to_json() const;
   static GBTModel from_json(const std::string& text);
};

GBTModel train_gbt(const std::vector<Row>& X, const std::vector<int>& y, const TrainConfig& cfg);
GBTModel train_gbt(const PairDataset& data, const TrainConfig& cfg);

std::vector<Row> feature_matrix(const PairDataset& data);
std::vector<int> labels_of(const PairDataset& data);

double log_loss(const std::vector<double>& p, const std::vector<int>& y);

}  // namespace bidleak
