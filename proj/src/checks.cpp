#include "weaksup/checks.hpp"

#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/models.hpp"
#include "weaksup/sweep.hpp"
#include "weaksup/theory.hpp"
#include "weaksup/training.hpp"

#include <algorithm>
#include <cmath>

namespace weaksup {
namespace checks {

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;

double relative_gradient_error(const Vector& analytic, const Vector& reference) {
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-6);
  return (analytic - reference).cwiseAbs().maxCoeff() / scale;
}

// Pool of families exercised by the random gradient checks. Loss bounds are
// set high so the checks probe the smooth region; clipping has its own test.
std::vector<PredictorFamily> gradient_check_families() {
  std::vector<PredictorFamily> out;
  out.push_back(PredictorFamily::weak_map(3, 2, Arch::Linear, 0, 5.0, WeakKind::Categorical, 4));
  out.push_back(PredictorFamily::weak_map(4, 3, Arch::OneHidden, 6, 5.0, WeakKind::Categorical, 8));
  out.push_back(
      PredictorFamily::weak_map(3, 2, Arch::OneHidden, 5, 5.0, WeakKind::Continuous, 2));
  {
    PredictorFamily f = PredictorFamily::strong_predictor(3, 2, 4, Arch::Linear, 0, 5.0,
                                                          StrongLoss::CrossEntropyClipped, 1e6);
    out.push_back(f);
  }
  out.push_back(PredictorFamily::strong_predictor(2, 3, 3, Arch::OneHidden, 6, 5.0,
                                                  StrongLoss::CrossEntropyClipped, 1e6));
  out.push_back(PredictorFamily::strong_predictor(3, 2, 2, Arch::OneHidden, 4, 5.0,
                                                  StrongLoss::SquaredClipped, 1e6));
  return out;
}

Dataset random_dataset_for(const PredictorFamily& family, Index rows, Rng& rng) {
  Dataset data;
  data.x.resize(rows, family.x_dim);
  for (Index i = 0; i < rows; ++i) {
    data.x.row(i) = rng.normal_vector(family.x_dim).transpose();
  }
  data.labels.resize(rows);
  if (family.role == Role::WeakMap) {
    data.kind = DatasetKind::WeakPairs;
    for (Index i = 0; i < rows; ++i) {
      data.labels[i] = family.weak_kind == WeakKind::Categorical
                           ? static_cast<double>(rng.uniform_int(family.weak_classes))
                           : rng.uniform(-2.0, 2.0);
    }
  } else {
    data.kind = DatasetKind::Augmented;
    data.z.resize(rows, family.latent_dim);
    for (Index i = 0; i < rows; ++i) {
      data.z.row(i) = rng.normal_vector(family.latent_dim).transpose();
      data.labels[i] = static_cast<double>(rng.uniform_int(family.num_classes));
    }
  }
  return data;
}

}  // namespace

CheckResult gradient_checks(int count) {
  const auto families = gradient_check_families();
  Rng rng(derive_seed(4242, "gradient_checks"));
  double worst = 0.0;
  int done = 0;
  for (int i = 0; i < count; ++i) {
    const PredictorFamily& family = families[static_cast<std::size_t>(i) % families.size()];
    const Index rows = 2 + static_cast<Index>(rng.uniform_int(6));
    const Dataset data = random_dataset_for(family, rows, rng);
    ParamVector params{rng.ball_point(family.param_count(), 0.6 * family.radius),
                       family.family_id};
    std::vector<Index> batch;
    for (Index r = 0; r < rows; ++r) batch.push_back(r);
    const Vector analytic = gradient(family, params, data, batch);
    const Vector fd = finite_difference_gradient(family, params, data, batch, kGradStep);
    worst = std::max(worst, relative_gradient_error(analytic, fd));
    ++done;
  }
  CheckResult res;
  res.name = "gradient_check";
  res.pass = worst < kGradTolerance;
  res.details = std::to_string(done) + "/" + std::to_string(count) +
                " triples, max relative error " + fmt_full(worst) + " (tolerance " +
                fmt_full(kGradTolerance) + ")";
  return res;
}

CheckResult gradient_negative_control() {
  const auto families = gradient_check_families();
  Rng rng(derive_seed(777, "gradient_negative"));
  const PredictorFamily& family = families[1];
  const Dataset data = random_dataset_for(family, 5, rng);
  ParamVector params{rng.ball_point(family.param_count(), 0.5 * family.radius),
                     family.family_id};
  std::vector<Index> batch{0, 1, 2, 3, 4};
  Vector corrupted = gradient(family, params, data, batch);
  corrupted[0] += 0.05;  // deliberate defect
  const Vector fd = finite_difference_gradient(family, params, data, batch, kGradStep);
  const double err = relative_gradient_error(corrupted, fd);
  CheckResult res;
  res.name = "gradient_negative_control";
  res.pass = err >= kGradTolerance;
  res.details = "corrupted gradient reports relative error " + fmt_full(err) +
                (res.pass ? " and is flagged" : " but was NOT flagged");
  return res;
}

CheckResult loss_boundedness(long evals_per_family) {
  std::vector<PredictorFamily> families;
  const SyntheticProblem cat = fixtures::default_categorical();
  families.push_back(fixtures::default_weak_family(cat));
  families.push_back(fixtures::default_strong_family(cat));
  {
    PredictorFamily f = PredictorFamily::weak_map(3, 2, Arch::OneHidden, 5, 20.0,
                                                  WeakKind::Continuous, 2);
    f.loss_bound = 4.0;
    families.push_back(f);
  }
  families.push_back(PredictorFamily::strong_predictor(3, 2, 3, Arch::OneHidden, 6, 20.0,
                                                       StrongLoss::SquaredClipped, 2.5));

  Rng rng(derive_seed(31337, "boundedness"));
  double worst_excess = -1e300;
  for (const auto& family : families) {
    const Index batch_rows = 50;
    long remaining = evals_per_family;
    while (remaining > 0) {
      const Index rows = static_cast<Index>(std::min<long>(batch_rows, remaining));
      const Dataset data = random_dataset_for(family, rows, rng);
      ParamVector params{rng.ball_point(family.param_count(), family.radius),
                         family.family_id};
      if (family.role == Role::WeakMap) {
        const Vector heads = weak_head_scores(family, params, data.x);
        for (Index i = 0; i < rows; ++i) {
          const double v = weak_eval_loss(family, heads[i], data.labels[i]);
          worst_excess = std::max(worst_excess, v - std::max(family.loss_bound, 1.0));
        }
      } else {
        const Matrix scores = strong_scores_rows(family, params, data.x, data.z);
        for (Index i = 0; i < rows; ++i) {
          const double v = strong_loss_from_scores(family, scores.row(i).transpose(),
                                                   static_cast<int>(data.labels[i]));
          worst_excess = std::max(worst_excess, v - family.loss_bound);
        }
      }
      remaining -= rows;
    }
  }
  CheckResult res;
  res.name = "loss_boundedness";
  res.pass = worst_excess <= 0.0;
  res.details = std::to_string(evals_per_family) + " evals/family, worst loss-over-bound excess " +
                fmt_full(worst_excess);
  return res;
}

CheckResult oracle_equivalence() {
  CheckResult res;
  res.name = "oracle_equivalence";
  res.pass = true;
  double worst_gap = -1e300;

  // Fixture A: 4-parameter linear strong family, squared loss.
  {
    Rng rng(derive_seed(555, "oracle_a"));
    Dataset data;
    data.kind = DatasetKind::Augmented;
    const Index rows = 80;
    data.x.resize(rows, 1);
    data.z.resize(rows, 1);
    data.labels.resize(rows);
    for (Index i = 0; i < rows; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      data.x(i, 0) = x;
      data.z(i, 0) = std::tanh(2.0 * x);
      data.labels[i] = x > 0.0 ? 1.0 : 0.0;
    }
    PredictorFamily family = PredictorFamily::strong_predictor(1, 1, 2, Arch::Linear, 0, 4.0,
                                                               StrongLoss::SquaredClipped, 50.0);
    family.use_bias = false;  // 4 parameters
    TrainConfig cfg;
    cfg.step_size = 0.1;
    cfg.batch_size = 8;
    cfg.max_epochs = 400;
    cfg.holdout_fraction = 0.0;
    cfg.seed = 7;
    const TrainedModel sgd = train_strong(family, data, cfg);
    std::vector<Index> rows_idx;
    for (Index i = 0; i < rows; ++i) rows_idx.push_back(i);
    const double sgd_risk = mean_eval_risk(family, sgd.params, data, rows_idx);
    const OracleResult oracle = erm_grid_oracle(family, data, 33);
    worst_gap = std::max(worst_gap, sgd_risk - oracle.risk);
    if (sgd_risk > oracle.risk + 1e-2) res.pass = false;
  }

  // Fixture B: 1-parameter threshold family (fixed head, no bias).
  {
    Dataset data;
    data.kind = DatasetKind::WeakPairs;
    data.x.resize(6, 1);
    data.x << -3.0, -2.0, -1.0, 1.0, 2.0, 3.0;
    data.labels.resize(6);
    data.labels << 0, 0, 0, 1, 1, 1;
    PredictorFamily family =
        PredictorFamily::weak_map(1, 1, Arch::Linear, 0, 3.0, WeakKind::Categorical, 2);
    family.use_bias = false;
    family.head_mode = HeadMode::FixedOnes;
    family.family_id = family.default_id() + ":threshold";
    TrainConfig cfg;
    cfg.step_size = 0.05;
    cfg.batch_size = 3;
    cfg.max_epochs = 300;
    cfg.holdout_fraction = 0.0;
    cfg.seed = 11;
    const TrainedModel sgd = train_weak(family, data, cfg);
    std::vector<Index> rows_idx{0, 1, 2, 3, 4, 5};
    const double sgd_risk = mean_eval_risk(family, sgd.params, data, rows_idx);
    const OracleResult oracle = erm_grid_oracle(family, data, 61);
    worst_gap = std::max(worst_gap, sgd_risk - oracle.risk);
    if (sgd_risk > oracle.risk + 1e-2) res.pass = false;
  }

  // Fixture C: 3-parameter weak map with trained head.
  {
    Rng rng(derive_seed(556, "oracle_c"));
    Dataset data;
    data.kind = DatasetKind::WeakPairs;
    const Index rows = 50;
    data.x.resize(rows, 1);
    data.labels.resize(rows);
    for (Index i = 0; i < rows; ++i) {
      const double x = rng.uniform(-2.0, 2.0);
      data.x(i, 0) = x;
      data.labels[i] = x > 0.3 ? 1.0 : 0.0;
    }
    PredictorFamily family =
        PredictorFamily::weak_map(1, 1, Arch::Linear, 0, 3.0, WeakKind::Categorical, 2);
    TrainConfig cfg;
    cfg.step_size = 0.05;
    cfg.batch_size = 8;
    cfg.max_epochs = 400;
    cfg.holdout_fraction = 0.0;
    cfg.seed = 13;
    const TrainedModel sgd = train_weak(family, data, cfg);
    std::vector<Index> rows_idx;
    for (Index i = 0; i < rows; ++i) rows_idx.push_back(i);
    const double sgd_risk = mean_eval_risk(family, sgd.params, data, rows_idx);
    const OracleResult oracle = erm_grid_oracle(family, data, 41);
    worst_gap = std::max(worst_gap, sgd_risk - oracle.risk);
    if (sgd_risk > oracle.risk + 1e-2) res.pass = false;
  }

  res.details = "worst SGD-minus-oracle risk gap " + fmt_full(worst_gap) + " (tolerance 1e-2)";
  return res;
}

CheckResult central_condition_transfer() {
  CheckResult res;
  res.name = "central_condition_transfer";
  res.pass = true;
  const double eta = 1.0;
  double worst_margin = -1e300;
  int audits = 0;
  for (const auto& fx : fixtures::make_audit_fixtures()) {
    const AtomList p_atoms = distribution_p(fx.problem);
    const auto probes = fx.all_probe_losses();
    const CentralConditionEstimate eps_p =
        central_condition_eps(probes, fx.star_loss(), p_atoms, eta, fx.name + ":star");
    const double bound_b = fx.strong_family.loss_bound;
    for (const auto& g_hat : fx.g_hats) {
      const AtomList phat = distribution_p_hat(fx.problem, g_hat.latent);
      const CentralConditionEstimate eps_phat =
          central_condition_eps(probes, fx.star_loss(), phat, eta, fx.name + ":star");
      const double rate = measure_rate_m(fx.problem, g_hat).value;
      double allowance = 0.0;
      if (fx.problem.weak_kind == WeakKind::Categorical) {
        allowance = std::exp(eta * bound_b) / eta * rate;
      } else {
        allowance = 2.0 * std::sqrt(2.0) *
                    std::sqrt(fx.analytic_l * std::exp(eta * bound_b) / eta) * std::sqrt(rate);
      }
      const double margin = allowance - (eps_phat.epsilon_hat - eps_p.epsilon_hat);
      worst_margin = audits == 0 ? margin : std::min(worst_margin, margin);
      ++audits;
      if (margin < -1e-9) res.pass = false;
    }
  }
  res.details = std::to_string(audits) + " audits, smallest bound-minus-increase margin " +
                fmt_full(worst_margin);
  return res;
}

CheckResult epsilon_identity() {
  const auto fixtures_list = fixtures::make_audit_fixtures();
  const auto& fx = fixtures_list.front();
  const AtomList p_atoms = distribution_p(fx.problem);
  const AffineMap g0 = fx.problem.g0;
  const AtomList phat =
      distribution_p_hat(fx.problem, [g0](const Vector& x) { return g0(x); });
  const auto probes = fx.all_probe_losses();
  const double a =
      central_condition_eps(probes, fx.star_loss(), p_atoms, 1.0, "star").epsilon_hat;
  const double b = central_condition_eps(probes, fx.star_loss(), phat, 1.0, "star").epsilon_hat;
  CheckResult res;
  res.name = "epsilon_identity_ghat_eq_g0";
  res.pass = a == b;
  res.details = "eps(P) = " + fmt_full(a) + ", eps(P-hat) = " + fmt_full(b);
  return res;
}

CheckResult decomposition_audit() {
  CheckResult res;
  res.name = "decomposition_audit";
  res.pass = true;
  double worst_slack = 1e300;
  int audits = 0;
  for (const auto& fx : fixtures::make_audit_fixtures()) {
    const AtomList p_atoms = distribution_p(fx.problem);
    const AtomLoss star = fx.star_loss();
    const double star_risk = exact_risk(p_atoms, star, "strong").value;
    for (const auto& g_hat : fx.g_hats) {
      const AtomList phat = distribution_p_hat(fx.problem, g_hat.latent);
      const double rate = measure_rate_m(fx.problem, g_hat).value;
      for (std::size_t pi = 1; pi < fx.probe_params.size(); ++pi) {
        const AtomLoss f_hat = fx.probe_loss(pi);
        const double excess = exact_risk(phat, f_hat, "strong").value - star_risk;
        const double rate_n = measure_rate_n(phat, f_hat, star).value;
        const DecompositionReport rep =
            decomposition_check(excess, rate, rate_n, fx.analytic_l, true, true);
        worst_slack = std::min(worst_slack, rep.slack);
        ++audits;
        if (rep.violation && rep.slack < -1e-9) res.pass = false;
      }
    }
  }
  res.details = std::to_string(audits) + " audits, smallest slack " + fmt_full(worst_slack) +
                " (must be >= -1e-9)";
  return res;
}

CheckResult chernoff_validity(long trials) {
  struct Law {
    std::string name;
    std::function<double(double)> log_mgf;
    std::function<double(Rng&)> sample;
  };
  std::vector<Law> laws;
  laws.push_back({"const_0.1", logmgf_constant(0.1), [](Rng&) { return 0.1; }});
  laws.push_back({"twopoint_01", logmgf_two_point(0.0, 1.0, 0.5),
                  [](Rng& r) { return r.uniform() < 0.5 ? 1.0 : 0.0; }});
  laws.push_back({"twopoint_wide", logmgf_two_point(-0.2, 0.5, 0.7),
                  [](Rng& r) { return r.uniform() < 0.7 ? 0.5 : -0.2; }});
  laws.push_back({"uniform_01", logmgf_uniform(0.0, 1.0), [](Rng& r) { return r.uniform(); }});
  laws.push_back({"uniform_wide", logmgf_uniform(-0.5, 1.0),
                  [](Rng& r) { return r.uniform(-0.5, 1.0); }});

  CheckResult res;
  res.name = "cramer_chernoff_validity";
  res.pass = true;
  int combos = 0;
  double worst_margin = 1e300;
  Rng rng(derive_seed(20240601, "chernoff"));
  for (const auto& law : laws) {
    for (long n : {1L, 5L, 20L}) {
      for (double frac : {0.3, 0.8}) {
        const double eta = 1.0;
        const double t = frac * (-law.log_mgf(eta) / eta);
        const double bound = cramer_chernoff_bound(law.log_mgf, eta, n, t);
        long hits = 0;
        for (long trial = 0; trial < trials; ++trial) {
          double sum = 0.0;
          for (long j = 0; j < n; ++j) sum += law.sample(rng);
          if (sum / static_cast<double>(n) <= t) ++hits;
        }
        const double empirical = static_cast<double>(hits) / static_cast<double>(trials);
        const double se =
            std::sqrt(std::max(empirical * (1.0 - empirical), 1e-12) /
                      static_cast<double>(trials));
        const double margin = bound + 3.0 * se - empirical;
        worst_margin = std::min(worst_margin, margin);
        ++combos;
        if (empirical > bound + 3.0 * se) res.pass = false;
      }
    }
  }
  res.details = std::to_string(combos) + " (law, n, t, eta) combos at " + std::to_string(trials) +
                " trials; smallest bound-minus-empirical margin " + fmt_full(worst_margin);
  return res;
}

CheckResult powerlaw_recovery() {
  CheckResult res;
  res.name = "powerlaw_recovery";
  res.pass = true;
  std::string detail;

  auto make_record = [](long n, double err) {
    SweepRecord rec;
    rec.schedule = "zero";
    rec.n = n;
    rec.seed = 1;
    rec.test_error = err;
    rec.excess_risk = err;
    return rec;
  };

  {
    std::vector<SweepRecord> records{make_record(10, 0.2), make_record(100, 0.02),
                                     make_record(1000, 0.002)};
    const RateFit fit = fit_rate(records, FitMetric::TestError);
    const double c = std::exp(fit.log_c);
    if (std::abs(fit.gamma - 1.0) > 1e-12 || std::abs(c - 2.0) > 1e-12 ||
        std::abs(fit.r_squared - 1.0) > 1e-12) {
      res.pass = false;
    }
    detail += "noiseless gamma=" + fmt_full(fit.gamma) + " C=" + fmt_full(c) +
              " r2=" + fmt_full(fit.r_squared);
  }
  {
    Rng rng(derive_seed(99, "powerlaw_noise"));
    std::vector<SweepRecord> records;
    for (int i = 0; i < 10; ++i) {
      const long n = 16L << i;
      const double clean = 5.0 * std::pow(static_cast<double>(n), -0.5);
      records.push_back(make_record(n, clean * (1.0 + 0.01 * rng.uniform(-1.0, 1.0))));
    }
    const RateFit fit = fit_rate(records, FitMetric::TestError);
    if (std::abs(fit.gamma - 0.5) > 0.05) res.pass = false;
    detail += "; noisy gamma=" + fmt_full(fit.gamma) + " (target 0.5 +- 0.05)";
  }
  res.details = detail;
  return res;
}

std::vector<CheckResult> run_all(bool quick) {
  std::vector<CheckResult> out;
  out.push_back(gradient_checks(quick ? 30 : 100));
  out.push_back(gradient_negative_control());
  out.push_back(loss_boundedness(quick ? 10000 : 100000));
  out.push_back(oracle_equivalence());
  out.push_back(central_condition_transfer());
  out.push_back(epsilon_identity());
  out.push_back(decomposition_audit());
  out.push_back(chernoff_validity(quick ? 20000 : 100000));
  out.push_back(powerlaw_recovery());
  return out;
}

}  // namespace checks
}  // namespace weaksup
