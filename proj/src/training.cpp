#include "weaksup/training.hpp"

#include "weaksup/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace weaksup {

namespace {

std::vector<Index> index_range(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

TrainedModel train_family(const PredictorFamily& family, const Dataset& data,
                          const TrainConfig& cfg) {
  cfg.validate();
  family.validate();
  require(data.rows() >= 1, "training: dataset is empty");

  Rng rng(derive_seed(cfg.seed, "train:" + family.family_id));
  std::vector<Index> perm = index_range(data.rows());
  rng.shuffle(perm);
  const Index holdout_count =
      std::min<Index>(static_cast<Index>(cfg.holdout_fraction * static_cast<double>(data.rows())),
                      data.rows() - 1);
  const std::vector<Index> holdout(perm.begin(), perm.begin() + holdout_count);
  std::vector<Index> train(perm.begin() + holdout_count, perm.end());

  TrainedModel result;
  result.params = init_params(family, cfg.seed);
  result.final_holdout_risk = std::numeric_limits<double>::quiet_NaN();

  ParamVector checkpoint = result.params;
  double checkpoint_risk = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.step_size * std::pow(cfg.decay, epoch / 2);
    rng.shuffle(train);
    for (std::size_t at = 0; at < train.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(train.size(), at + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Index> batch(train.begin() + static_cast<std::ptrdiff_t>(at),
                                     train.begin() + static_cast<std::ptrdiff_t>(stop));
      const Vector grad = gradient(family, result.params, data, batch);
      result.params.values = project_l2(result.params.values - lr * grad, family.radius);
    }
    result.epochs_run = epoch + 1;
    result.trajectory.push_back(
        {epoch, "train", mean_training_loss(family, result.params, data, train)});

    if (holdout_count > 0 && (epoch + 1) % cfg.early_stop_every == 0) {
      const double holdout_risk = mean_eval_risk(family, result.params, data, holdout);
      result.trajectory.push_back({epoch, "holdout", holdout_risk});
      if (holdout_risk > checkpoint_risk) {
        result.params = checkpoint;
        result.final_holdout_risk = checkpoint_risk;
        result.early_stopped = true;
        return result;
      }
      checkpoint = result.params;
      checkpoint_risk = holdout_risk;
      result.final_holdout_risk = holdout_risk;
    }
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  require(step_size > 0.0, "train config: step_size must be positive");
  require(decay > 0.0 && decay <= 1.0, "train config: decay must lie in (0, 1]");
  require(batch_size >= 1, "train config: batch_size must be >= 1");
  require(max_epochs >= 1, "train config: max_epochs must be >= 1");
  require(early_stop_every >= 1, "train config: early_stop_every must be >= 1");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "train config: holdout_fraction must lie in [0, 1)");
}

TrainedModel train_weak(const PredictorFamily& family, const Dataset& data,
                        const TrainConfig& cfg) {
  require(family.role == Role::WeakMap, "train_weak: weak family required");
  require(data.kind == DatasetKind::WeakPairs, "train_weak: WeakPairs dataset required");
  return train_family(family, data, cfg);
}

TrainedModel train_strong(const PredictorFamily& family, const Dataset& data,
                          const TrainConfig& cfg) {
  require(family.role == Role::StrongPredictor, "train_strong: strong family required");
  require(data.kind == DatasetKind::Augmented, "train_strong: Augmented dataset required");
  return train_family(family, data, cfg);
}

Dataset augment(const Dataset& strong_data, const PredictorFamily& weak_family,
                const ParamVector& g_hat) {
  require(strong_data.kind == DatasetKind::StrongPairs, "augment: StrongPairs dataset required");
  require(strong_data.x.cols() == weak_family.x_dim, "augment: input dimension mismatch");
  Dataset out;
  out.kind = DatasetKind::Augmented;
  out.x = strong_data.x;
  out.z = weak_latent_rows(weak_family, g_hat, strong_data.x);
  out.labels = strong_data.labels;
  out.seed = strong_data.seed;
  return out;
}

int Pipeline::predict(const Vector& x) const {
  Index best = 0;
  scores(x).maxCoeff(&best);
  return static_cast<int>(best);
}

Pipeline run_pipeline(const SyntheticProblem& problem, const Dataset* weak_data,
                      const Dataset& strong_data, const PredictorFamily& weak_family,
                      const PredictorFamily& strong_family, const TrainConfig& weak_cfg,
                      const TrainConfig& strong_cfg) {
  require(weak_family.x_dim == problem.input_dim, "pipeline: weak family input dim mismatch");
  require(weak_family.latent_dim == problem.latent_dim &&
              strong_family.latent_dim == problem.latent_dim,
          "pipeline: latent dim mismatch");
  if (weak_data != nullptr) {
    require(weak_family.weak_kind == problem.weak_kind, "pipeline: weak kind mismatch");
  }

  Pipeline pipe;
  pipe.weak_family = weak_family;
  pipe.strong_family = strong_family;
  pipe.weak_seed = weak_cfg.seed;
  pipe.strong_seed = strong_cfg.seed;
  pipe.n = strong_data.rows();

  if (weak_data != nullptr && weak_data->rows() > 0) {
    pipe.m = weak_data->rows();
    pipe.g_hat = train_weak(weak_family, *weak_data, weak_cfg).params;
  } else {
    // m = 0 baseline: the latent input is a frozen random map.
    pipe.m = 0;
    pipe.g_hat = init_params(weak_family, weak_cfg.seed);
  }

  const Dataset augmented = augment(strong_data, weak_family, pipe.g_hat);
  pipe.f_hat = train_strong(strong_family, augmented, strong_cfg).params;
  return pipe;
}

OracleResult erm_grid_oracle(const PredictorFamily& family, const Dataset& data,
                             int grid_resolution) {
  family.validate();
  const int d = family.param_count();
  require(d <= 4, "erm_grid_oracle: only families with <= 4 parameters are supported");
  require(grid_resolution >= 2, "erm_grid_oracle: need at least 2 grid points per axis");
  require(data.rows() >= 1, "erm_grid_oracle: dataset is empty");

  Vector axis(grid_resolution);
  for (int i = 0; i < grid_resolution; ++i) {
    axis[i] = -family.radius +
              2.0 * family.radius * static_cast<double>(i) /
                  static_cast<double>(grid_resolution - 1);
  }

  const auto rows = index_range(data.rows());
  OracleResult best;
  best.risk = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  ParamVector candidate{Vector::Zero(d), family.family_id};
  const double ball = family.radius * (1.0 + 1e-12);
  while (true) {
    for (int j = 0; j < d; ++j) candidate.values[j] = axis[idx[static_cast<std::size_t>(j)]];
    if (candidate.values.norm() <= ball) {
      const double risk = mean_eval_risk(family, candidate, data, rows);
      // Strict comparison keeps the first (lexicographically smallest) argmin.
      if (risk < best.risk) {
        best.risk = risk;
        best.params = candidate;
      }
    }
    // Odometer with the last axis fastest: candidates appear in
    // lexicographically ascending order.
    int pos = d - 1;
    while (pos >= 0) {
      if (++idx[static_cast<std::size_t>(pos)] < grid_resolution) break;
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  require(std::isfinite(best.risk), "erm_grid_oracle: no grid point inside the ball");
  return best;
}

std::shared_ptr<const Annotator> make_annotator(const SyntheticProblem& problem,
                                                const PredictorFamily& family,
                                                double target_accuracy, Index holdout_m,
                                                const TrainConfig& cfg) {
  require(problem.weak_kind == WeakKind::Categorical,
          "make_annotator: categorical weak labels required");
  require(target_accuracy > 0.0 && target_accuracy <= 1.0,
          "make_annotator: target_accuracy must lie in (0, 1]");
  require(holdout_m >= 2, "make_annotator: need at least 2 held-out rows");

  // Held-out split, disjoint from anything sampled with the caller's seeds.
  const Dataset held = sample_weak(problem, holdout_m, derive_seed(cfg.seed, "annotator_data"),
                                   WeakCorruption::none());
  Rng rng(derive_seed(cfg.seed, "annotator"));
  std::vector<Index> perm = index_range(held.rows());
  rng.shuffle(perm);
  const Index val_count = std::max<Index>(1, held.rows() / 5);
  const std::vector<Index> val(perm.begin(), perm.begin() + val_count);
  std::vector<Index> train(perm.begin() + val_count, perm.end());

  ParamVector params = init_params(family, cfg.seed);
  double reached = 0.0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.step_size * std::pow(cfg.decay, epoch / 2);
    rng.shuffle(train);
    for (std::size_t at = 0; at < train.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(train.size(), at + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Index> batch(train.begin() + static_cast<std::ptrdiff_t>(at),
                                     train.begin() + static_cast<std::ptrdiff_t>(stop));
      const Vector grad = gradient(family, params, held, batch);
      params.values = project_l2(params.values - lr * grad, family.radius);
    }
    reached = 1.0 - mean_eval_risk(family, params, held, val);
    if (reached >= target_accuracy) {
      auto annotator = std::make_shared<Annotator>();
      annotator->target_accuracy = target_accuracy;
      annotator->label_fn = [family, params](const Vector& x) {
        return static_cast<double>(
            weak_class_of_head(family, weak_head_score(family, params, x)));
      };
      return annotator;
    }
  }
  throw Error("make_annotator: validation accuracy stalled at " + fmt_full(reached) +
              " before reaching " + fmt_full(target_accuracy));
}

void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::string& path) {
  std::string out = "epoch,split,risk\n";
  for (const auto& p : trajectory) {
    out += std::to_string(p.epoch) + "," + p.split + "," + fmt_full(p.risk) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace weaksup
