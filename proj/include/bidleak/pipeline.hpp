#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bidleak/core.hpp"
#include "bidleak/cv.hpp"
#include "bidleak/features.hpp"
#include "bidleak/mixture.hpp"
#include "bidleak/report.hpp"
#include "bidleak/simulator.hpp"
#include "bidleak/validation.hpp"

namespace bidleak {

struct EstimatorSettings {
   std::size_t grid_size = 1000;
   std::optional<double> bandwidth;  // overrides every KDE bandwidth
   bool shared_bandwidth = true;     // one bandwidth for all four densities
   bool delta_correction = true;
   EmOptions em{.regularize = true, .fair_mass_floor = 0.7};
};

struct PipelineConfig {
   std::string input_csv;             // auction CSV, or empty to simulate
   std::optional<SimConfig> simulate;
   std::string out_dir;
   TrainConfig train;
   EstimatorSettings estimator;
   std::vector<std::string> groupings = grouping_keys();
   std::optional<TimePoint> now;  // defaults to wall clock, recorded in the manifest
   double parity_threshold = 0.02;
   double evidence_threshold = 0.03;

   std::string to_json() const;
   static PipelineConfig from_json(const std::string& text);
};

struct Estimation {
   DensityGrid f_w, f_wbar;
   DeltaCorrection delta;
   MixtureEstimate estimate;
   std::vector<PosteriorRow> posteriors;  // one per level-0 winner
};

// Level-0 and level-1 predictions in, prior and per-auction posteriors out.
Estimation estimate_from_predictions(const OOFPredictions& level0, const OOFPredictions& level1,
                                     const EstimatorSettings& settings);

struct PipelineResult {
   FilterReport filter;
   DatasetStats stats;
   PairDataset levels[3];
   CVResult cv;
   ParityReport parity;
   Estimation estimation;
   double alpha_no_delta = 0;
   std::map<std::string, ReportTable> reports;
   IndependenceReport independence;
   double sniper = 0;

   double alpha() const { return estimation.estimate.alpha; }
};

// Everything after ingestion; no file I/O.
PipelineResult analyze(const std::vector<AuctionRecord>& records, const PipelineConfig& cfg,
                       TimePoint now);

// Full run with artifacts and manifest written to cfg.out_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// file helpers
std::string read_file(const std::string& path);
void atomic_write(const std::string& path, const std::string& content);
std::string sha256_hex(const std::string& data);

}  // namespace bidleak
