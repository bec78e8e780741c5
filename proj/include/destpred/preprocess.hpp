#pragma once

#include <string>
#include <vector>

#include "destpred/trajectory.hpp"

namespace destpred {

struct TauThreshold {
  // Fixed cut when `percentile` is 0, otherwise the nearest-rank percentile
  // of the roundtrip-factor distribution at step (4), e.g. 95 for "p95".
  double fixed = 0.0;
  int percentile = 0;

  static TauThreshold fixed_value(double v) { return {v, 0}; }
  static TauThreshold from_percentile(int p) { return {0.0, p}; }
};

struct PreprocessConfig {
  double min_duration_s = 120.0;
  double max_duration_s = 7200.0;
  double speed_limit_kmh = 240.0;
  BBox bbox{41.0, 41.35, -8.75, -8.45};  // Porto analysis area
  TauThreshold tau = TauThreshold::from_percentile(95);
};

struct PipelineReport {
  struct Row {
    std::string step;
    std::size_t kept = 0;
    double kept_percent = 0.0;
  };
  std::vector<Row> rows;
  double tau_threshold = 0.0;  // resolved value applied at step (4)

  std::string to_csv() const;  // "step,kept_count,kept_percent"
};

// Step (1): drop trips shorter than min_duration_s, longer than
// max_duration_s (both strict), or with a single point.
std::vector<Trajectory> filter_duration(std::vector<Trajectory> trips,
                                        const PreprocessConfig& cfg);

// Step (2): points whose incoming or outgoing implied speed exceeds the
// limit are replaced by the per-coordinate median of the [n-1, n, n+1]
// window (endpoints use the 2-point mean). At most two passes; the point
// count never changes and no trip is removed.
Trajectory smooth_speed_outliers(Trajectory trip, const PreprocessConfig& cfg);

// Implied speeds above the limit, for tests and pass control.
int count_speed_violations(const Trajectory& trip, double speed_limit_kmh);

// Step (3): drop trips with any point outside the analysis bbox.
std::vector<Trajectory> filter_bbox(std::vector<Trajectory> trips,
                                    const PreprocessConfig& cfg);

// Roundtrip factor tau = path length / beeline (Step 4 input). Returns
// +infinity when the beeline is zero; throws on fewer than two points.
double roundtrip_factor(const Trajectory& trip);

// Nearest-rank percentile over the finite tau values; infinite markers sort
// above any threshold. Throws when no finite value exists.
double tau_percentile_threshold(const std::vector<double>& taus,
                                int percentile);

// Steps (1)-(4) in order; the report has one row per step plus the input row.
std::pair<std::vector<Trajectory>, PipelineReport> run_pipeline(
    std::vector<Trajectory> trips, const PreprocessConfig& cfg);

}  // namespace destpred
