#include "bidleak/mixture.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "bidleak/core.hpp"

namespace bidleak {

std::vector<double> isotonic_nonincreasing(const std::vector<double>& v,
                                           const std::vector<double>& w) {
   struct Block {
      double value, weight;
      std::size_t count;
   };
   std::vector<Block> st;
   for (std::size_t i = 0; i < v.size(); ++i) {
      st.push_back({v[i], w[i], 1});
      while (st.size() > 1 && st[st.size() - 2].value < st.back().value) {
         Block b = st.back();
         st.pop_back();
         Block& a = st.back();
         const double W = a.weight + b.weight;
         a.value = W > 0 ? (a.value * a.weight + b.value * b.weight) / W : std::max(a.value, b.value);
         a.weight = W;
         a.count += b.count;
      }
   }
   std::vector<double> out;
   out.reserve(v.size());
   for (const auto& b : st) out.insert(out.end(), b.count, b.value);
   return out;
}

namespace {

bool aligned(const std::vector<double>& a, const std::vector<double>& b) {
   if (a.size() != b.size()) return false;
   for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-12) return false;
   return true;
}

double mean_at(const std::vector<double>& curve, const std::vector<double>& ys) {
   double s = 0;
   for (double y : ys) s += interp_unit(curve, y);
   return s / double(ys.size());
}

}  // namespace

MixtureEstimate em_estimate(const DensityGrid& f_w, const DensityGrid& f_wbar,
                            const DeltaCorrection& delta, const std::vector<double>& winner_preds,
                            const EmOptions& opts) {
   if (f_w.values.size() < 2 || !aligned(f_w.grid, f_wbar.grid) || !aligned(f_w.grid, delta.grid) ||
       f_w.values.size() != f_w.grid.size())
      throw DataError("em_estimate: misaligned grids");
   if (winner_preds.empty()) throw DataError("em_estimate: no winner predictions");
   const std::size_t G = f_w.grid.size();

   MixtureEstimate est;
   est.grid = f_w.grid;
   est.bandwidths = {{"f_w", f_w.bandwidth}, {"f_wbar", f_wbar.bandwidth}, {"delta", delta.bandwidth}};

   DensityGrid fair;
   fair.grid = f_w.grid;
   fair.bandwidth = f_wbar.bandwidth;
   fair.values.resize(G);
   for (std::size_t i = 0; i < G; ++i) fair.values[i] = std::max(f_wbar.values[i] + delta.values[i], 0.0);
   const double mass = fair.integral();
   if (!(mass > 1e-9)) throw DataError("em_estimate: delta dominates baseline");
   for (double& v : fair.values) v /= mass;

   std::vector<double> r(G);
   for (std::size_t i = 0; i < G; ++i) r[i] = fair.values[i] / std::max(f_w.values[i], opts.eps);

   if (opts.regularize) {
      double wsum = 0;
      for (double v : f_w.values) wsum += v;
      std::vector<double> w(G);
      for (std::size_t i = 0; i < G; ++i) w[i] = f_w.values[i] / wsum + 1e-12;
      if (opts.fair_mass_floor > 0) {
         std::size_t k = 0;
         double cw = 0, rw = 0, ww = 0;
         for (; k < G; ++k) {
            cw += w[k];
            rw += r[k] * w[k];
            ww += w[k];
            if (cw >= opts.fair_mass_floor) break;
         }
         k = std::min(k, G - 1);
         std::fill(r.begin(), r.begin() + std::ptrdiff_t(k) + 1, rw / ww);
      }
      r = isotonic_nonincreasing(r, w);
      const double m = mean_at(r, winner_preds);
      if (!(m > 0)) throw DataError("em_estimate: degenerate density ratio");
      for (double& v : r) v /= m;
   }

   auto posterior_at = [&](double a) {
      std::vector<double> p(G);
      for (std::size_t i = 0; i < G; ++i) p[i] = std::clamp(1 - (1 - a) * r[i], 0.0, 1.0);
      return p;
   };

   double a = opts.alpha0;
   est.converged = false;
   int it = 0;
   for (; it < opts.max_iter; ++it) {
      const double next = mean_at(posterior_at(a), winner_preds);
      const bool done = std::abs(next - a) < opts.tol;
      a = next;
      if (done) {
         est.converged = true;
         ++it;
         break;
      }
   }
   est.alpha = a;
   est.iterations = it;
   est.posterior = posterior_at(a);
   est.ratio = std::move(r);
   est.corrected_fair_density = std::move(fair);
   return est;
}

double posterior_for_auction(const MixtureEstimate& est, double y) {
   return std::clamp(interp_unit(est.posterior, y), 0.0, 1.0);
}

std::string MixtureEstimate::to_json() const {
   nlohmann::json j{{"alpha", alpha},         {"grid", grid},
                    {"posterior", posterior}, {"bandwidths", bandwidths},
                    {"iterations", iterations}, {"converged", converged}};
   return j.dump();
}

}  // namespace bidleak
