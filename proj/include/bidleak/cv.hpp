#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bidleak/gbt.hpp"

namespace bidleak {

struct OOFPredictions {
   std::vector<std::string> auction_id;
   std::vector<int> label;
   std::vector<double> y;                      // averaged over repeats
   std::vector<std::vector<double>> by_repeat;  // [repeat][row]
   std::vector<std::vector<int>> fold;         // [repeat][row]

   std::size_t size() const { return y.size(); }
};

struct EvalMetrics {
   double accuracy = 0, roc_auc = 0;
   double accuracy_std = 0, roc_auc_std = 0;
};

struct CVResult {
   OOFPredictions oof;                   // the training dataset itself
   std::vector<OOFPredictions> applied;  // extra datasets scored by the fold models
};

// Folds partition auction ids. Rows of `also` are scored by the fold model that
// held out their auction, so no prediction comes from a model that saw it.
CVResult cross_val_predict(const PairDataset& data, const TrainConfig& cfg,
                           const std::vector<const PairDataset*>& also = {});

double roc_auc(const std::vector<double>& score, const std::vector<int>& label);
double accuracy(const std::vector<double>& score, const std::vector<int>& label);
EvalMetrics evaluate(const OOFPredictions& preds);

// level,auction_id,label,y
void write_predictions(std::ostream& out, const std::vector<const OOFPredictions*>& levels);
std::vector<OOFPredictions> read_predictions(std::istream& in);

}  // namespace bidleak
