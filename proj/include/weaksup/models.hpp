#pragma once

#include "weaksup/synth.hpp"
#include "weaksup/types.hpp"

#include <functional>
#include <string>

namespace weaksup {

enum class Role { WeakMap, StrongPredictor };
enum class Arch { Linear, OneHidden };
enum class StrongLoss { CrossEntropyClipped, SquaredClipped };
enum class HeadMode { Trained, FixedOnes };

// A parameterized hypothesis class. Weak maps send x to a latent vector and
// score it with a linear head; strong predictors send (x, z) to one score
// per class. Parameters always live in the L2 ball of the given radius and
// loss values are clipped at loss_bound so they stay in [0, B].
struct PredictorFamily {
  Role role = Role::StrongPredictor;
  Arch arch = Arch::Linear;
  int hidden = 0;        // width of the tanh layer (OneHidden only)
  bool use_bias = true;
  double radius = 10.0;  // R
  double loss_bound = 10.0;  // B
  std::string family_id;

  int x_dim = 0;
  int latent_dim = 0;  // s; weak output dim, part of strong input dim

  // weak-role evaluation config
  WeakKind weak_kind = WeakKind::Categorical;
  int weak_classes = 2;
  WeakNorm weak_norm = WeakNorm::L2;
  HeadMode head_mode = HeadMode::Trained;

  // strong-role config
  int num_classes = 0;  // k
  StrongLoss loss = StrongLoss::CrossEntropyClipped;

  int feature_dim() const {
    return role == Role::WeakMap ? x_dim : x_dim + latent_dim;
  }
  int output_dim() const {
    return role == Role::WeakMap ? latent_dim : num_classes;
  }
  int param_count() const;
  void validate() const;
  std::string default_id() const;

  static PredictorFamily weak_map(int x_dim, int latent_dim, Arch arch, int hidden,
                                  double radius, WeakKind kind, int weak_classes,
                                  WeakNorm norm = WeakNorm::L2);
  static PredictorFamily strong_predictor(int x_dim, int latent_dim, int num_classes, Arch arch,
                                          int hidden, double radius, StrongLoss loss,
                                          double loss_bound);
};

struct ParamVector {
  Vector values;
  std::string family_id;
};

// --- evaluation ------------------------------------------------------------

// Forward pass over a batch; rows are samples. Weak maps return latents,
// strong predictors return class scores. Inputs must already be the family's
// feature layout ([x] or [x|z]).
Matrix family_forward(const PredictorFamily& family, const ParamVector& params,
                      const Matrix& inputs);

Vector weak_latent(const PredictorFamily& family, const ParamVector& params, const Vector& x);
Matrix weak_latent_rows(const PredictorFamily& family, const ParamVector& params,
                        const Matrix& x_rows);
// beta . g(x) per row.
Vector weak_head_scores(const PredictorFamily& family, const ParamVector& params,
                        const Matrix& x_rows);
double weak_head_score(const PredictorFamily& family, const ParamVector& params, const Vector& x);
// Binned class of a head score: clamp(round(t), 0, k-1).
int weak_class_of_head(const PredictorFamily& family, double head_score);

Vector strong_scores(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                     const Vector& z);
Matrix strong_scores_rows(const PredictorFamily& family, const ParamVector& params,
                          const Matrix& x_rows, const Matrix& z_rows);

// Clipped evaluation losses.
double strong_loss_from_scores(const PredictorFamily& family, const Vector& scores, int y);
double loss_strong(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                   const Vector& z, int y);
// 0/1 on the binned head (categorical) or |t - w| (continuous).
double weak_eval_loss(const PredictorFamily& family, double head_score, double w);
double loss_weak(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                 double w);

// Smooth training surrogate for the weak task evaluated at a head score:
// cross-entropy over softmax(-(t - j)^2) for categorical labels, squared
// error for continuous ones.
double weak_surrogate_loss(const PredictorFamily& family, double head_score, double w);

// Mean training loss over the selected rows (surrogate for weak families,
// the clipped loss for strong ones).
double mean_training_loss(const PredictorFamily& family, const ParamVector& params,
                          const Dataset& data, const std::vector<Index>& rows);
// Mean evaluation risk over the selected rows (0/1 or norm for weak, clipped
// loss for strong).
double mean_eval_risk(const PredictorFamily& family, const ParamVector& params,
                      const Dataset& data, const std::vector<Index>& rows);

// --- gradients ---------------------------------------------------------------

// Analytic gradient of the mean training loss over the given rows.
Vector gradient(const PredictorFamily& family, const ParamVector& params, const Dataset& data,
                const std::vector<Index>& rows);
Vector gradient(const PredictorFamily& family, const ParamVector& params, const Dataset& data);

// Central finite-difference gradient of the same objective; test oracle.
Vector finite_difference_gradient(const PredictorFamily& family, const ParamVector& params,
                                  const Dataset& data, const std::vector<Index>& rows, double h);

// --- parameters --------------------------------------------------------------

Vector project_l2(const Vector& theta, double radius);
ParamVector project_l2(ParamVector params, double radius);

// Uniform per-layer init in +-1/sqrt(fan_in), projected into the ball.
ParamVector init_params(const PredictorFamily& family, std::uint64_t seed);

// Max over random parameter pairs in the ball of the per-point loss change
// per unit parameter distance; a lower bound on the true L'.
double estimate_param_lipschitz(const PredictorFamily& family, const Dataset& data,
                                int probe_count, std::uint64_t seed);
// Generic core used by the family wrapper and by tests: loss_at(theta) must
// return per-point losses for a parameter vector of dimension dim.
double estimate_lipschitz_core(const std::function<Vector(const Vector&)>& loss_at, Index dim,
                               double radius, int probe_count, std::uint64_t seed);

// --- serialization -------------------------------------------------------------

void write_params_csv(const ParamVector& params, const std::string& path);
ParamVector read_params_csv(const std::string& path);

Config family_to_config(const PredictorFamily& family, const std::string& section);
PredictorFamily family_from_config(const Config& cfg, const std::string& section, Role role);

}  // namespace weaksup
