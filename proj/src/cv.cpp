#include "bidleak/cv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include "bidleak/csv.hpp"

namespace bidleak {

namespace {

OOFPredictions skeleton(const PairDataset& ds, int repeats) {
   OOFPredictions o;
   for (const auto& r : ds.rows) {
      o.auction_id.push_back(r.auction_id);
      o.label.push_back(r.label);
   }
   o.y.assign(ds.rows.size(), 0.0);
   o.by_repeat.assign(repeats, std::vector<double>(ds.rows.size(), 0.0));
   o.fold.assign(repeats, std::vector<int>(ds.rows.size(), -1));
   return o;
}

double mean(const std::vector<double>& v) {
   return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_std(const std::vector<double>& v) {
   if (v.size() < 2) return 0.0;
   double m = mean(v), s = 0;
   for (double x : v) s += (x - m) * (x - m);
   return std::sqrt(s / double(v.size() - 1));
}

}  // namespace

CVResult cross_val_predict(const PairDataset& data, const TrainConfig& cfg,
                           const std::vector<const PairDataset*>& also) {
   cfg.validate();
   std::vector<std::string> ids;
   for (const auto& r : data.rows) ids.push_back(r.auction_id);
   std::sort(ids.begin(), ids.end());
   ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
   if (ids.size() < std::size_t(cfg.n_folds))
      throw DataError("cross_val_predict: fewer auctions than folds");

   const auto X = feature_matrix(data);
   const auto y = labels_of(data);

   CVResult res;
   res.oof = skeleton(data, cfg.n_repeats);
   for (const auto* ds : also) res.applied.push_back(skeleton(*ds, cfg.n_repeats));

   for (int rep = 0; rep < cfg.n_repeats; ++rep) {
      std::vector<std::string> shuffled = ids;
      std::mt19937_64 rng(cfg.seed + std::uint64_t(rep));
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      std::unordered_map<std::string, int> fold_of;
      for (std::size_t i = 0; i < shuffled.size(); ++i) fold_of[shuffled[i]] = int(i % cfg.n_folds);

      auto assign = [&](const PairDataset& ds, OOFPredictions& o) {
         for (std::size_t i = 0; i < ds.rows.size(); ++i) {
            auto it = fold_of.find(ds.rows[i].auction_id);
            if (it == fold_of.end())
               throw DataError("cross_val_predict: auction " + ds.rows[i].auction_id +
                               " missing from the training dataset");
            o.fold[rep][i] = it->second;
         }
      };
      assign(data, res.oof);
      for (std::size_t a = 0; a < also.size(); ++a) assign(*also[a], res.applied[a]);

      for (int f = 0; f < cfg.n_folds; ++f) {
         std::vector<Row> Xtr;
         std::vector<int> ytr;
         for (std::size_t i = 0; i < X.size(); ++i) {
            if (res.oof.fold[rep][i] == f) continue;
            Xtr.push_back(X[i]);
            ytr.push_back(y[i]);
         }
         const GBTModel m = train_gbt(Xtr, ytr, cfg);
         for (std::size_t i = 0; i < X.size(); ++i)
            if (res.oof.fold[rep][i] == f) res.oof.by_repeat[rep][i] = m.predict(X[i]);
         for (std::size_t a = 0; a < also.size(); ++a) {
            auto& o = res.applied[a];
            for (std::size_t i = 0; i < also[a]->rows.size(); ++i)
               if (o.fold[rep][i] == f) o.by_repeat[rep][i] = m.predict(also[a]->rows[i].features);
         }
      }
   }

   auto average = [&](OOFPredictions& o) {
      for (std::size_t i = 0; i < o.y.size(); ++i) {
         double s = 0;
         for (int rep = 0; rep < cfg.n_repeats; ++rep) s += o.by_repeat[rep][i];
         o.y[i] = s / double(cfg.n_repeats);
      }
   };
   average(res.oof);
   for (auto& o : res.applied) average(o);
   return res;
}

// Mann-Whitney: average ranks over ties, so each tied pair contributes 1/2.
double roc_auc(const std::vector<double>& score, const std::vector<int>& label) {
   const std::size_t n = score.size();
   std::size_t pos = 0;
   for (int l : label) pos += l == 1;
   const std::size_t neg = n - pos;
   if (pos == 0 || neg == 0) throw DataError("roc_auc: both labels required");

   std::vector<std::size_t> idx(n);
   std::iota(idx.begin(), idx.end(), 0);
   std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
   double rank_sum = 0;
   for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && score[idx[j]] == score[idx[i]]) ++j;
      const double avg = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
      for (std::size_t k = i; k < j; ++k)
         if (label[idx[k]] == 1) rank_sum += avg;
      i = j;
   }
   const double u = rank_sum - double(pos) * double(pos + 1) / 2.0;
   return u / (double(pos) * double(neg));
}

double accuracy(const std::vector<double>& score, const std::vector<int>& label) {
   if (score.empty()) throw DataError("accuracy: empty input");
   std::size_t ok = 0;
   for (std::size_t i = 0; i < score.size(); ++i) ok += int(score[i] > 0.5) == label[i];
   return double(ok) / double(score.size());
}

EvalMetrics evaluate(const OOFPredictions& preds) {
   if (preds.y.empty()) throw DataError("evaluate: empty predictions");
   EvalMetrics m;
   if (preds.by_repeat.empty()) {
      m.accuracy = accuracy(preds.y, preds.label);
      m.roc_auc = roc_auc(preds.y, preds.label);
      return m;
   }
   std::vector<double> acc, auc;
   for (const auto& r : preds.by_repeat) {
      acc.push_back(accuracy(r, preds.label));
      auc.push_back(roc_auc(r, preds.label));
   }
   m.accuracy = mean(acc);
   m.roc_auc = mean(auc);
   m.accuracy_std = sample_std(acc);
   m.roc_auc_std = sample_std(auc);
   return m;
}

void write_predictions(std::ostream& out, const std::vector<const OOFPredictions*>& levels) {
   out << "level,auction_id,label,y\n";
   char buf[32];
   for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto& o = *levels[l];
      for (std::size_t i = 0; i < o.size(); ++i) {
         std::snprintf(buf, sizeof buf, "%.17g", o.y[i]);
         csv::write_row(out, {std::to_string(l), o.auction_id[i], std::to_string(o.label[i]), buf});
      }
   }
}

std::vector<OOFPredictions> read_predictions(std::istream& in) {
   std::vector<std::string> f;
   std::size_t lines = 0;
   std::string raw;
   if (!csv::read_row(in, f, lines, &raw) || raw != "level,auction_id,label,y")
      throw DataError("predictions: unexpected header");
   std::vector<OOFPredictions> out;
   while (csv::read_row(in, f, lines)) {
      if (f.empty()) continue;
      if (f.size() != 4) throw DataError("predictions: bad row at line " + std::to_string(lines));
      std::size_t level;
      int label;
      double y;
      try {
         level = std::stoul(f[0]);
         label = std::stoi(f[2]);
         y = std::stod(f[3]);
      } catch (const std::exception&) {
         throw DataError("predictions: bad number at line " + std::to_string(lines));
      }
      if (level > 16) throw DataError("predictions: level out of range");
      if (out.size() <= level) out.resize(level + 1);
      out[level].auction_id.push_back(f[1]);
      out[level].label.push_back(label);
      out[level].y.push_back(y);
   }
   return out;
}

}  // namespace bidleak
