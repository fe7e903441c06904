#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidleak/kde.hpp"

namespace bidleak {

struct ConvergenceError : std::runtime_error {
   using std::runtime_error::runtime_error;
};

struct EmOptions {
   // Starting at 0 the monotone iteration lands on the smallest fixed point;
   // alpha = 1 is always a fixed point.
   double alpha0 = 0.0;
   double tol = 1e-6;
   int max_iter = 10000;
   double eps = 1e-6;  // guard on f_w in the ratio
   // Regularize the fair/winner ratio: pool the lowest fair_mass_floor of winner
   // mass, fit a non-increasing curve, rescale so E_winners[r] = 1.
   bool regularize = false;
   double fair_mass_floor = 0.0;
};

struct MixtureEstimate {
   double alpha = 0;
   std::vector<double> grid;
   std::vector<double> posterior;
   std::vector<double> ratio;  // ratio actually used by the iteration
   DensityGrid corrected_fair_density;
   std::map<std::string, double> bandwidths;
   int iterations = 0;
   bool converged = false;

   std::string to_json() const;
};

// Weighted least-squares non-increasing fit (pool adjacent violators).
std::vector<double> isotonic_nonincreasing(const std::vector<double>& v,
                                           const std::vector<double>& w);

MixtureEstimate em_estimate(const DensityGrid& f_w, const DensityGrid& f_wbar,
                            const DeltaCorrection& delta, const std::vector<double>& winner_preds,
                            const EmOptions& opts = {});

double posterior_for_auction(const MixtureEstimate& est, double y);

}  // namespace bidleak
