#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "destpred/models.hpp"
#include "destpred/partition.hpp"
#include "destpred/rng.hpp"
#include "destpred/trajectory.hpp"

namespace destpred {

struct TrainConfig {
  double alpha_final = 0.5;  // loss mix after warmup
  int warmup_epochs = 2;     // epochs trained on the point error alone
  int epochs = 20;
  int batch_size = 32;
  double lr = 1e-3;
  double lr_decay = 1.0;  // per-epoch multiplicative factor, 1 = constant
  std::uint64_t seed = 42;
  // Stop once the epoch's training point error falls below this many meters;
  // non-positive disables the shortcut.
  double early_stop_train_e1 = -1.0;

  void validate() const;  // throws std::invalid_argument
};

// 1 during warmup, alpha_final afterwards. epoch is 0-based.
double alpha_for_epoch(const TrainConfig& cfg, int epoch);

// Prefix length drawn uniformly from the integers [2, N-1].
// Throws std::invalid_argument("trajectory too short") when n < 3.
int sample_partial_len(std::size_t n, Rng& rng);

// Point error: great-circle distance of the weighted prediction (Eq.-style
// batch means are taken by the callers).
double loss_e1(const GeoPoint& y_hat, const GeoPoint& y);
// d loss_e1 / d (y_hat.lat, y_hat.lon), in meters per degree.
void loss_e1_grad(const GeoPoint& y_hat, const GeoPoint& y, double& d_lat,
                  double& d_lon);
// Expected centroid distance: sum_i scores[i] * D(centroid_i, y).
double loss_e2(std::span<const double> scores,
               std::span<const GeoPoint> centroids, const GeoPoint& y);
// alpha_epoch * e1 + (1 - alpha_epoch) * e2.
double loss_combined(double e1, double e2, int epoch, const TrainConfig& cfg);

// Per-example losses and the gradient of alpha*E1 + (1-alpha)*E2 with
// respect to the score vector.
struct ExampleLoss {
  double e1 = 0.0;
  double e2 = 0.0;
  GeoPoint y_hat;
  std::vector<double> d_scores;
};
ExampleLoss example_loss(std::span<const double> scores,
                         std::span<const GeoPoint> centroids, const GeoPoint& y,
                         double alpha, bool with_grad);

struct EpochLog {
  int epoch = 0;
  double train_e1 = 0.0;
  double train_e2 = 0.0;
  double val_e1 = 0.0;
  double val_e2 = 0.0;
  double alpha = 1.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;        // epoch of the retained checkpoint
  double best_val = 0.0;      // its validation alpha_final-combined loss
  int used_train = 0;         // trips with N >= 3
  int used_val = 0;
};

// "epoch,train_E1,train_E2,val_E1,val_E2,alpha" rows.
void write_train_log(const std::string& path,
                     std::span<const EpochLog> log);

// Minibatch training of the combined loss with per-epoch validation. The
// best-validation parameters are restored into `model` at the end and saved
// to checkpoint_path when non-empty (log_csv_path likewise). Validation
// partials are resampled identically each epoch so epochs are comparable;
// with no validation trips the final epoch is retained. Divergence raises
// std::runtime_error beginning with "diverged".
TrainResult train(NeuralModel& model, std::span<const Trajectory> train_trips,
                  std::span<const Trajectory> val_trips,
                  const SpacePartition& partition, const TrainConfig& cfg,
                  const std::string& log_csv_path = "",
                  const std::string& checkpoint_path = "");

struct EvalReport {
  double e1_m = 0.0;
  double e2_m = 0.0;
  int count = 0;  // trips evaluated
  std::vector<int> completion_p;       // percent, 5..95 step 5
  std::vector<double> completion_e1;   // mean E1 per completion bin
  std::vector<double> completion_e2;
  double histogram_bin_m = 100.0;
  std::vector<int> histogram;          // per-trip E1 counts per bin

  std::string to_json() const;
  std::string completion_csv() const;  // "p,E1_m,E2_m"
};

// Random partials (seeded) plus deterministic completion curves: the p%
// prefix is the first ceil(p*N/100) points clamped to [2, N-1] so the
// destination never leaks into the input. Trips with N < 3 are skipped.
EvalReport evaluate(const Predictor& model, std::span<const Trajectory> test,
                    const SpacePartition& partition, std::uint64_t seed);

// Queries with a random contiguous window of duration t_seconds (clamped to
// the trip minus its final point). t_seconds <= 0 raises
// std::invalid_argument("empty snippet"). No completion curves.
EvalReport snippet_evaluate(const Predictor& model,
                            std::span<const Trajectory> test,
                            const SpacePartition& partition, double t_seconds,
                            std::uint64_t seed);

// "TRIP_ID,LATITUDE,LONGITUDE" rows, one per trip, predicted from the
// maximal non-leaking prefix.
void write_kaggle_csv(const Predictor& model,
                      std::span<const Trajectory> test,
                      const SpacePartition& partition,
                      const std::string& path);

// Central-difference check of d E_pred / d theta on a fixed batch of
// maximal prefixes. `alpha` weighs the two loss terms. The loss is measured
// in meters (values in the thousands), so the default step is larger than
// the generic checker's: below ~1e-4 the difference quotient drowns in the
// forward pass's roundoff.
nn::GradCheckReport check_model_gradients(NeuralModel& model,
                                          std::span<const Trajectory> batch,
                                          const SpacePartition& partition,
                                          double alpha, double h = 1e-4,
                                          double denom_floor = 1e-2);

// Mean over regions of the mean member-to-centroid distance; the scale a
// useful predictor must beat.
double mean_region_radius_m(const SpacePartition& partition,
                            std::span<const GeoPoint> points);

}  // namespace destpred
