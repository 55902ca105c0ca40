// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fail.

#include "weaksup/checks.hpp"
#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/sweep.hpp"
#include "weaksup/theory.hpp"
#include "weaksup/training.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

using namespace weaksup;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& details) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << details << "\n";
  std::cout.flush();
  if (!pass) ++g_failures;
}

int hw_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::map<std::string, RateFit> fits_by_schedule(const std::vector<SweepRecord>& records,
                                                const SweepPlan& plan, FitMetric metric) {
  std::map<std::string, RateFit> fits;
  for (const auto& schedule : plan.schedules) {
    std::vector<SweepRecord> subset;
    for (const auto& rec : records) {
      if (rec.schedule == schedule.name()) subset.push_back(rec);
    }
    fits[schedule.name()] = fit_rate(subset, metric);
  }
  return fits;
}

// Criterion: rate-ordering reproduction on the default categorical problem.
void criterion_rate_ordering() {
  const auto started = std::chrono::steady_clock::now();
  SweepPlan plan = fixtures::default_sweep_plan("default_cat", 0);
  plan.workers = hw_workers();
  const auto records = run_sweep(plan);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto fits = fits_by_schedule(records, plan, FitMetric::ExcessRisk);
  const RateFit zero = fits.at("zero");
  const RateFit linear = fits.at("linear");
  const RateFit quadratic = fits.at("quadratic");
  const bool ordering =
      quadratic.gamma >= linear.gamma && linear.gamma >= zero.gamma;
  const bool gap = quadratic.gamma - zero.gamma >= 0.2;
  const bool r2 = zero.r_squared >= 0.8 && linear.r_squared >= 0.8 &&
                  quadratic.r_squared >= 0.8;
  const bool in_time = seconds < 900.0;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "gamma zero/linear/quadratic = %.3f/%.3f/%.3f, r2 = %.3f/%.3f/%.3f, "
                "gap = %.3f (need >= 0.2), %.0f s (budget 900 s)",
                zero.gamma, linear.gamma, quadratic.gamma, zero.r_squared, linear.r_squared,
                quadratic.r_squared, quadratic.gamma - zero.gamma, seconds);
  report("rate_ordering_reproduction", ordering && gap && r2 && in_time, buf);
}

// Criterion: fast-rate regime on the separable problem with the strong
// central condition certified by exact enumeration.
void criterion_fast_rate() {
  SweepPlan plan = fixtures::default_sweep_plan("fastrate", 0);
  plan.workers = hw_workers();

  // Certificate: epsilon-hat at eta = 1 over the comparator, 200 random ball
  // probes, and a trained checkpoint, all evaluated by exact enumeration.
  const PredictorFamily& family = plan.strong_family;
  ParamVector star{Vector::Zero(family.param_count()), family.family_id};
  const int k = family.num_classes;  // 2
  const Index z0_col = plan.problem.input_dim;
  star.values[z0_col * k + 0] = -0.5;
  star.values[z0_col * k + 1] = 0.5;
  star.values[(z0_col + 1) * k + 0] = -0.5;
  star.values[(z0_col + 1) * k + 1] = 0.5;
  star.values[family.param_count() - 2] = 1.0;  // bias of class 0
  const AtomList p_atoms = distribution_p(plan.problem);
  const double star_risk = exact_risk(p_atoms, strong_model_loss(family, star), "sq").value;

  std::vector<AtomLoss> probes;
  probes.push_back(strong_model_loss(family, star));
  Rng rng(derive_seed(0, "fastrate_probes"));
  for (int i = 0; i < 200; ++i) {
    ParamVector probe{rng.ball_point(family.param_count(), family.radius), family.family_id};
    probes.push_back(strong_model_loss(family, probe));
  }
  {
    const Dataset strong_data = sample_strong(plan.problem, 500, 41);
    TrainConfig cfg = plan.strong_train;
    cfg.seed = 42;
    Dataset aug;
    aug.kind = DatasetKind::Augmented;
    aug.x = strong_data.x;
    aug.z = plan.problem.g0.apply_rows(strong_data.x);
    aug.labels = strong_data.labels;
    probes.push_back(
        strong_model_loss(family, train_strong(family, aug, cfg).params));
  }
  const CentralConditionEstimate eps = central_condition_eps(
      probes, strong_model_loss(family, star), p_atoms, 1.0, "analytic_zero_loss");

  // The sweep itself: quadratic schedule, 4 seeds.
  SweepPlan quad = plan;
  quad.schedules.clear();
  for (const auto& s : plan.schedules) {
    if (s.growth == Growth::Quadratic) quad.schedules.push_back(s);
  }
  const auto records = run_sweep(quad);
  std::vector<SweepRecord> subset;
  for (const auto& rec : records) {
    if (rec.schedule == "quadratic") subset.push_back(rec);
  }
  const RateFit fit = fit_rate(subset, FitMetric::ExcessRisk);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "epsilon-hat = %.3g (need <= 0.01, star risk %.3g, %d probes), "
                "quadratic gamma = %.3f (need >= 0.8, %zu seeds)",
                eps.epsilon_hat, star_risk, eps.family_sample_size, fit.gamma,
                quad.seeds.size());
  report("fast_rate_regime", eps.epsilon_hat <= 0.01 && fit.gamma >= 0.8 &&
                                 quad.seeds.size() >= 4,
         buf);
}

void criterion_from_check(const char* name, const checks::CheckResult& res) {
  report(name, res.pass, res.details);
}

// Criterion: cmd_sweep run twice from the same config and seed produces
// byte-identical CSV and SVG artifacts.
void criterion_determinism() {
  const fs::path cfg_path = "/tmp/weaksup_acceptance_det.cfg";
  const fs::path out_a = "/tmp/weaksup_acceptance_det_a";
  const fs::path out_b = "/tmp/weaksup_acceptance_det_b";
  write_text_file(cfg_path.string(),
                  "problem.builtin = fastrate\n"
                  "sweep.n_grid = 16,32,64,128\n"
                  "sweep.seeds = 1,2\n"
                  "sweep.weak_visit_budget = 40000\n"
                  "train_weak.max_epochs = 20\n"
                  "train_strong.max_epochs = 25\n");
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  auto run_once = [&](const fs::path& out, int workers) {
    const std::string cmd = std::string(WEAKSUP_CLI_PATH) + " sweep --config " +
                            cfg_path.string() + " --out " + out.string() + " --seed 7 --workers " +
                            std::to_string(workers) + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  const int rc_a = run_once(out_a, 2);
  const int rc_b = run_once(out_b, 1);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  bool identical = rc_a == 0 && rc_b == 0;
  int compared = 0;
  for (const char* artifact : {"results.csv", "plot_test_error.svg", "plot_excess_risk.svg",
                               "gamma_report.txt", "provenance.json"}) {
    const std::string a = slurp(out_a / artifact);
    const std::string b = slurp(out_b / artifact);
    identical = identical && !a.empty() && a == b;
    ++compared;
  }
  report("determinism_byte_identical",
         identical,
         "two cmd_sweep runs (different worker counts), " + std::to_string(compared) +
             " artifacts compared byte-for-byte");
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::remove(cfg_path);
}

void criterion_numerical_hygiene() {
  const auto grad = checks::gradient_checks(100);
  const auto fit = checks::powerlaw_recovery();
  report("numerical_hygiene", grad.pass && fit.pass, grad.details + "; " + fit.details);
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n";
  criterion_rate_ordering();
  criterion_fast_rate();
  criterion_from_check("central_condition_transfer", checks::central_condition_transfer());
  criterion_from_check("decomposition_audit", checks::decomposition_audit());
  criterion_from_check("cramer_chernoff_validity", checks::chernoff_validity(100000));
  criterion_from_check("oracle_equivalence", checks::oracle_equivalence());
  criterion_numerical_hygiene();
  criterion_determinism();
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
