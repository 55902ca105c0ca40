#pragma once

#include "weaksup/models.hpp"
#include "weaksup/synth.hpp"

#include <memory>
#include <string>
#include <vector>

namespace weaksup {

// Projected-SGD schedule: the step size is scaled by `decay` once every two
// epochs and holdout risk is checked once every `early_stop_every` epochs.
// Training stops at the first holdout-risk increase and reverts to the
// previous checkpoint.
struct TrainConfig {
  double step_size = 0.05;
  double decay = 0.97;
  int batch_size = 32;
  int max_epochs = 100;
  int early_stop_every = 5;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrajectoryPoint {
  int epoch;
  std::string split;  // "train" or "holdout"
  double risk;
};

struct TrainedModel {
  ParamVector params;
  std::vector<TrajectoryPoint> trajectory;
  int epochs_run = 0;
  bool early_stopped = false;
  double final_holdout_risk = 0.0;  // NaN when no holdout rows
};

TrainedModel train_weak(const PredictorFamily& family, const Dataset& data,
                        const TrainConfig& cfg);
TrainedModel train_strong(const PredictorFamily& family, const Dataset& data,
                          const TrainConfig& cfg);

// Attaches z = g_hat(x) to every strong row; x and y are untouched.
Dataset augment(const Dataset& strong_data, const PredictorFamily& weak_family,
                const ParamVector& g_hat);

// The trained two-stage predictor h(x) = f_hat(x, g_hat(x)).
struct Pipeline {
  PredictorFamily weak_family;
  ParamVector g_hat;
  PredictorFamily strong_family;
  ParamVector f_hat;
  long m = 0;
  long n = 0;
  std::uint64_t weak_seed = 0;
  std::uint64_t strong_seed = 0;

  Vector latent(const Vector& x) const { return weak_latent(weak_family, g_hat, x); }
  Matrix latent_rows(const Matrix& x_rows) const {
    return weak_latent_rows(weak_family, g_hat, x_rows);
  }
  Vector scores(const Vector& x) const {
    return strong_scores(strong_family, f_hat, x, latent(x));
  }
  int predict(const Vector& x) const;
  Matrix scores_rows(const Matrix& x_rows) const {
    return strong_scores_rows(strong_family, f_hat, x_rows, latent_rows(x_rows));
  }
};

// Runs the meta-algorithm: weak training, augmentation, strong training.
// Passing weak_data = nullptr (the m = 0 baseline) freezes g_hat at its
// random initialization so the strong family stays identical across arms.
Pipeline run_pipeline(const SyntheticProblem& problem, const Dataset* weak_data,
                      const Dataset& strong_data, const PredictorFamily& weak_family,
                      const PredictorFamily& strong_family, const TrainConfig& weak_cfg,
                      const TrainConfig& strong_cfg);

struct OracleResult {
  ParamVector params;
  double risk = 0.0;
};

// Brute-force ERM over an axis grid intersected with the L2 ball. Ties are
// broken toward the lexicographically smallest parameter vector. Only
// available for families with at most 4 parameters.
OracleResult erm_grid_oracle(const PredictorFamily& family, const Dataset& data,
                             int grid_resolution);

// Trains a weak model on fresh held-out data until its validation accuracy
// first reaches target_accuracy, then freezes it as a labeling function.
std::shared_ptr<const Annotator> make_annotator(const SyntheticProblem& problem,
                                                const PredictorFamily& family,
                                                double target_accuracy, Index holdout_m,
                                                const TrainConfig& cfg);

void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::string& path);

}  // namespace weaksup
