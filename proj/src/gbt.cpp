#include "bidleak/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace bidleak {

using json = nlohmann::json;

void TrainConfig::validate() const {
   if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
   if (max_depth < 1 || max_depth > 12) throw ConfigError("max_depth must be in [1, 12]");
   if (!(learning_rate > 0 && learning_rate <= 1))
      throw ConfigError("learning_rate must be in (0, 1]");
   if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
   if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
   if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
}

double Tree::eval(const Row& x) const {
   int k = 0;
   while (nodes[k].feature >= 0) {
      const auto& nd = nodes[k];
      k = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
   }
   return nodes[k].value;
}

int Tree::depth() const {
   std::vector<int> d(nodes.size(), 0);
   int best = 0;
   // children are always appended after their parent
   for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].feature < 0) continue;
      d[nodes[k].left] = d[nodes[k].right] = d[k] + 1;
      best = std::max(best, d[k] + 1);
   }
   return best;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string dec(double x) {
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", x);
   return buf;
}

double undec(const json& j) { return std::strtod(j.get<std::string>().c_str(), nullptr); }

}  // namespace

double GBTModel::predict(const Row& x) const {
   double z = initial_score;
   for (const auto& t : trees) z += learning_rate * t.eval(x);
   return sigmoid(z);
}

double log_loss(const std::vector<double>& p, const std::vector<int>& y) {
   double s = 0;
   for (std::size_t i = 0; i < p.size(); ++i) {
      double q = std::clamp(p[i], 1e-15, 1 - 1e-15);
      s -= y[i] ? std::log(q) : std::log(1 - q);
   }
   return p.empty() ? 0.0 : s / double(p.size());
}

std::vector<Row> feature_matrix(const PairDataset& data) {
   std::vector<Row> X;
   X.reserve(data.rows.size());
   for (const auto& r : data.rows) X.push_back(r.features.values());
   return X;
}

std::vector<int> labels_of(const PairDataset& data) {
   std::vector<int> y;
   y.reserve(data.rows.size());
   for (const auto& r : data.rows) y.push_back(r.label);
   return y;
}

GBTModel train_gbt(const PairDataset& data, const TrainConfig& cfg) {
   return train_gbt(feature_matrix(data), labels_of(data), cfg);
}

// Level-wise exact greedy growth: every depth is one pass over each presorted
// feature column, with per-node running sums.
GBTModel train_gbt(const std::vector<Row>& X, const std::vector<int>& y, const TrainConfig& cfg) {
   cfg.validate();
   const std::size_t N = X.size();
   if (N == 0) throw DataError("train_gbt: empty training set");
   if (y.size() != N) throw DataError("train_gbt: label count mismatch");
   std::size_t pos = 0;
   for (int v : y) pos += v == 1;
   if (pos == 0 || pos == N) throw DataError("train_gbt: single-class training set");

   constexpr std::size_t D = FeatureVector::kSize;
   std::array<std::vector<std::size_t>, D> order;
   for (std::size_t f = 0; f < D; ++f) {
      order[f].resize(N);
      std::iota(order[f].begin(), order[f].end(), 0);
      std::stable_sort(order[f].begin(), order[f].end(),
                       [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
   }

   GBTModel model;
   model.learning_rate = cfg.learning_rate;
   const double base = double(pos) / double(N);
   model.initial_score = std::log(base / (1 - base));

   std::vector<double> F(N, model.initial_score), p(N), g(N), h(N);
   for (std::size_t i = 0; i < N; ++i) p[i] = sigmoid(F[i]);
   model.train_loss.push_back(log_loss(p, y));

   const std::size_t msl = std::size_t(cfg.min_samples_leaf);
   std::vector<int> node_of(N);

   struct Acc {
      std::size_t n = 0;
      double s = 0;
   };
   struct Best {
      double gain = 0;
      int feature = -1;
      double threshold = 0;
   };

   for (int t = 0; t < cfg.n_trees; ++t) {
      for (std::size_t i = 0; i < N; ++i) {
         g[i] = y[i] - p[i];
         h[i] = p[i] * (1 - p[i]);
      }
      Tree tree;
      tree.nodes.emplace_back();
      std::fill(node_of.begin(), node_of.end(), 0);
      std::vector<int> active = {0};

      for (int depth = 0; depth < cfg.max_depth && !active.empty(); ++depth) {
         const std::size_t M = tree.nodes.size();
         std::vector<char> is_active(M, 0);
         for (int k : active) is_active[k] = 1;
         std::vector<Acc> tot(M);
         for (std::size_t i = 0; i < N; ++i) {
            if (!is_active[node_of[i]]) continue;
            tot[node_of[i]].n++;
            tot[node_of[i]].s += g[i];
         }
         std::vector<Best> best(M);
         for (std::size_t f = 0; f < D; ++f) {
            std::vector<Acc> run(M);
            std::vector<double> lastv(M, 0.0);
            for (std::size_t i : order[f]) {
               const int k = node_of[i];
               if (!is_active[k]) continue;
               const double x = X[i][f];
               Acc& r = run[k];
               if (r.n > 0 && x != lastv[k]) {
                  const std::size_t nl = r.n, nr = tot[k].n - r.n;
                  if (nl >= msl && nr >= msl) {
                     const double sr = tot[k].s - r.s;
                     const double gain = r.s * r.s / double(nl) + sr * sr / double(nr) -
                                         tot[k].s * tot[k].s / double(tot[k].n);
                     if (gain > best[k].gain) {
                        double thr = lastv[k] + (x - lastv[k]) / 2;
                        if (thr >= x) thr = lastv[k];
                        best[k] = {gain, int(f), thr};
                     }
                  }
               }
               r.n++;
               r.s += g[i];
               lastv[k] = x;
            }
         }
         std::vector<int> next;
         for (int k : active) {
            if (best[k].feature < 0 || best[k].gain <= 1e-12) continue;
            auto& nd = tree.nodes[k];
            nd.feature = best[k].feature;
            nd.threshold = best[k].threshold;
            nd.left = int(tree.nodes.size());
            nd.right = nd.left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            next.push_back(tree.nodes[k].left);
            next.push_back(tree.nodes[k].right);
         }
         if (next.empty()) break;
         for (std::size_t i = 0; i < N; ++i) {
            const auto& nd = tree.nodes[node_of[i]];
            if (nd.feature < 0) continue;
            node_of[i] = X[i][nd.feature] <= nd.threshold ? nd.left : nd.right;
         }
         active = std::move(next);
      }

      std::vector<double> sg(tree.nodes.size(), 0.0), sh(tree.nodes.size(), 0.0);
      for (std::size_t i = 0; i < N; ++i) {
         sg[node_of[i]] += g[i];
         sh[node_of[i]] += h[i];
      }
      for (std::size_t k = 0; k < tree.nodes.size(); ++k)
         if (tree.nodes[k].feature < 0) tree.nodes[k].value = sg[k] / std::max(sh[k], 1e-12);

      for (std::size_t i = 0; i < N; ++i) {
         F[i] += cfg.learning_rate * tree.nodes[node_of[i]].value;
         p[i] = sigmoid(F[i]);
      }
      model.train_loss.push_back(log_loss(p, y));
      model.trees.push_back(std::move(tree));
   }
   return model;
}

std::string GBTModel::to_json() const {
   json j;
   j["format"] = "bidleak-gbt";
   j["version"] = 1;
   j["initial_score"] = dec(initial_score);
   j["learning_rate"] = dec(learning_rate);
   j["features"] = FeatureVector::names();
   json trees_j = json::array();
   for (const auto& t : trees) {
      json f = json::array(), thr = json::array(), l = json::array(), r = json::array(),
           v = json::array();
      for (const auto& nd : t.nodes) {
         f.push_back(nd.feature);
         thr.push_back(dec(nd.threshold));
         l.push_back(nd.left);
         r.push_back(nd.right);
         v.push_back(dec(nd.value));
      }
      trees_j.push_back({{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"value", v}});
   }
   j["trees"] = trees_j;
   json loss = json::array();
   for (double x : train_loss) loss.push_back(dec(x));
   j["train_loss"] = loss;
   return j.dump();
}

GBTModel GBTModel::from_json(const std::string& text) {
   json j;
   try {
      j = json::parse(text);
   } catch (const json::exception& e) {
      throw DataError(std::string("model json: ") + e.what());
   }
   if (j.value("format", "") != "bidleak-gbt" || j.value("version", 0) != 1)
      throw DataError("model json: unsupported format or version");
   GBTModel m;
   try {
      m.initial_score = undec(j["initial_score"]);
      m.learning_rate = undec(j["learning_rate"]);
      for (const auto& tj : j["trees"]) {
         Tree t;
         const auto n = tj["feature"].size();
         for (std::size_t k = 0; k < n; ++k) {
            TreeNode nd;
            nd.feature = tj["feature"][k];
            nd.threshold = undec(tj["threshold"][k]);
            nd.left = tj["left"][k];
            nd.right = tj["right"][k];
            nd.value = undec(tj["value"][k]);
            t.nodes.push_back(nd);
         }
         // children must come after the parent, which also rules out cycles
         for (std::size_t k = 0; k < n; ++k) {
            const auto& nd = t.nodes[k];
            if (nd.feature < 0) continue;
            if (nd.feature >= int(FeatureVector::kSize) || nd.left <= int(k) || nd.right <= int(k) ||
                nd.left >= int(n) || nd.right >= int(n))
               throw DataError("model json: malformed tree");
         }
         if (n == 0) throw DataError("model json: empty tree");
         m.trees.push_back(std::move(t));
      }
      if (j.contains("train_loss"))
         for (const auto& x : j["train_loss"]) m.train_loss.push_back(undec(x));
   } catch (const json::exception& e) {
      throw DataError(std::string("model json: ") + e.what());
   }
   return m;
}

}  // namespace bidleak
