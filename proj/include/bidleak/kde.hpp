#pragma once

#include <optional>
#include <vector>

namespace bidleak {

// evenly spaced points on [0, 1]
std::vector<double> unit_grid(std::size_t size);

// Trapezoidal integral of values sampled on an even grid over [0, 1].
double trapezoid(const std::vector<double>& values);

// Linear interpolation on an even [0, 1] grid; y is clamped into [0, 1].
double interp_unit(const std::vector<double>& values, double y);

struct DensityGrid {
   std::vector<double> grid;
   std::vector<double> values;
   double bandwidth = 0;

   double integral() const { return trapezoid(values); }
   double at(double y) const { return interp_unit(values, y); }
};

// Signed difference of two densities on a shared grid and bandwidth.
struct DeltaCorrection {
   std::vector<double> grid;
   std::vector<double> values;
   double bandwidth = 0;

   double integral() const { return trapezoid(values); }
};

constexpr std::size_t kMinKdePoints = 100;

// 0.9 * min(sd, IQR/1.34) * n^(-1/5); falls back to sd when the IQR is zero.
double silverman_bandwidth(const std::vector<double>& xs);

// Data-driven bandwidths are floored at one grid step so any sample stays visible on the grid.
double grid_bandwidth_floor(std::size_t grid_size);

// Gaussian KDE reflected at 0 and 1, renormalized on the grid.
DensityGrid estimate_density(const std::vector<double>& predictions, std::size_t grid_size = 1000,
                             std::optional<double> bandwidth = std::nullopt);

// KDE(winners) - KDE(runner-ups) with a shared bandwidth (the smaller Silverman
// bandwidth unless one is given).
DeltaCorrection estimate_delta(const std::vector<double>& placebo_winner_preds,
                               const std::vector<double>& placebo_runnerup_preds,
                               std::size_t grid_size = 1000,
                               std::optional<double> bandwidth = std::nullopt);

}  // namespace bidleak
