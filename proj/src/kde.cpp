#include "bidleak/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bidleak/core.hpp"

namespace bidleak {

std::vector<double> unit_grid(std::size_t size) {
   if (size < 2) throw ConfigError("grid size must be >= 2");
   std::vector<double> g(size);
   for (std::size_t i = 0; i < size; ++i) g[i] = double(i) / double(size - 1);
   return g;
}

double trapezoid(const std::vector<double>& v) {
   if (v.size() < 2) return 0.0;
   double s = 0.5 * (v.front() + v.back());
   for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
   return s / double(v.size() - 1);
}

double interp_unit(const std::vector<double>& v, double y) {
   y = std::clamp(y, 0.0, 1.0);
   const double pos = y * double(v.size() - 1);
   const std::size_t i = std::min(std::size_t(pos), v.size() - 2);
   const double w = pos - double(i);
   return v[i] + w * (v[i + 1] - v[i]);
}

namespace {

// numpy-style linear quantile on sorted data
double quantile(const std::vector<double>& sorted, double q) {
   const double pos = q * double(sorted.size() - 1);
   const std::size_t i = std::size_t(pos);
   if (i + 1 >= sorted.size()) return sorted.back();
   return sorted[i] + (pos - double(i)) * (sorted[i + 1] - sorted[i]);
}

void check_points(const std::vector<double>& xs) {
   if (xs.size() < kMinKdePoints)
      throw DataError("estimate_density: need at least 100 predictions, got " +
                      std::to_string(xs.size()));
   for (double x : xs)
      if (!(x > 0 && x < 1)) throw DataError("estimate_density: predictions must lie in (0, 1)");
}

}  // namespace

double grid_bandwidth_floor(std::size_t grid_size) { return 1.0 / double(std::max<std::size_t>(grid_size, 2) - 1); }

double silverman_bandwidth(const std::vector<double>& xs) {
   if (xs.size() < 2) throw DataError("silverman_bandwidth: need at least 2 points");
   std::vector<double> s = xs;
   std::sort(s.begin(), s.end());
   const double n = double(s.size());
   double m = 0;
   for (double x : s) m += x;
   m /= n;
   double ss = 0;
   for (double x : s) ss += (x - m) * (x - m);
   const double sd = std::sqrt(ss / (n - 1));
   const double iqr = quantile(s, 0.75) - quantile(s, 0.25);
   double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
   return 0.9 * spread * std::pow(n, -0.2);
}

DensityGrid estimate_density(const std::vector<double>& predictions, std::size_t grid_size,
                             std::optional<double> bandwidth) {
   check_points(predictions);
   const double h =
       bandwidth ? *bandwidth : std::max(silverman_bandwidth(predictions), grid_bandwidth_floor(grid_size));
   if (!(h > 0)) throw DataError("estimate_density: bandwidth must be positive");

   // reflected copies; only sources within 8h of a grid point contribute
   std::vector<double> src;
   src.reserve(predictions.size() * 3);
   for (double x : predictions) {
      src.push_back(x);
      src.push_back(-x);
      src.push_back(2 - x);
   }
   std::sort(src.begin(), src.end());

   DensityGrid d;
   d.grid = unit_grid(grid_size);
   d.values.assign(grid_size, 0.0);
   d.bandwidth = h;
   const double reach = 8 * h;
   const double norm = 1.0 / (double(predictions.size()) * h * std::sqrt(2 * std::numbers::pi));
   for (std::size_t g = 0; g < grid_size; ++g) {
      const double y = d.grid[g];
      auto lo = std::lower_bound(src.begin(), src.end(), y - reach);
      auto hi = std::upper_bound(lo, src.end(), y + reach);
      double s = 0;
      for (auto it = lo; it != hi; ++it) {
         const double z = (y - *it) / h;
         s += std::exp(-0.5 * z * z);
      }
      d.values[g] = s * norm;
   }
   const double total = d.integral();
   if (!(total > 0)) throw DataError("estimate_density: zero mass on grid");
   for (double& v : d.values) v /= total;
   return d;
}

DeltaCorrection estimate_delta(const std::vector<double>& placebo_winner_preds,
                               const std::vector<double>& placebo_runnerup_preds,
                               std::size_t grid_size, std::optional<double> bandwidth) {
   check_points(placebo_winner_preds);
   check_points(placebo_runnerup_preds);
   const double h = bandwidth ? *bandwidth
                              : std::max(std::min(silverman_bandwidth(placebo_winner_preds),
                                                  silverman_bandwidth(placebo_runnerup_preds)),
                                         grid_bandwidth_floor(grid_size));
   const auto a = estimate_density(placebo_winner_preds, grid_size, h);
   const auto b = estimate_density(placebo_runnerup_preds, grid_size, h);
   DeltaCorrection out;
   out.grid = a.grid;
   out.bandwidth = h;
   out.values.resize(grid_size);
   for (std::size_t i = 0; i < grid_size; ++i) out.values[i] = a.values[i] - b.values[i];
   return out;
}

}  // namespace bidleak
