// Command-line front end: problem generation, pipeline training, rate
// sweeps, power-law fits, and the invariant check suite.

#include "weaksup/checks.hpp"
#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/models.hpp"
#include "weaksup/sweep.hpp"
#include "weaksup/synth.hpp"
#include "weaksup/theory.hpp"
#include "weaksup/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace ws = weaksup;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitInvariant = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Every key the configuration language accepts; unknown keys are hard errors.
const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "problem.builtin", "problem.input_dim", "problem.latent_dim", "problem.support.kind",
      "problem.support.atoms", "problem.support.probs", "problem.support.count",
      "problem.support.seed", "problem.support.law", "problem.support.scale",
      "problem.g0.weights", "problem.g0.bias", "problem.g0.nonlin", "problem.beta0",
      "problem.weak.kind", "problem.weak.classes", "problem.weak.norm",
      "problem.weak.noise_halfwidth", "problem.label.coeff_x", "problem.label.coeff_z",
      "problem.label.offset", "problem.label.relabel", "problem.label.classes",
      "problem.label.p_flip",
      "weak_family.arch", "weak_family.hidden", "weak_family.bias", "weak_family.radius",
      "weak_family.bound", "weak_family.head",
      "strong_family.arch", "strong_family.hidden", "strong_family.bias",
      "strong_family.radius", "strong_family.bound", "strong_family.loss",
      "train_weak.step_size", "train_weak.decay", "train_weak.batch_size",
      "train_weak.max_epochs", "train_weak.early_stop_every", "train_weak.holdout_fraction",
      "train_strong.step_size", "train_strong.decay", "train_strong.batch_size",
      "train_strong.max_epochs", "train_strong.early_stop_every",
      "train_strong.holdout_fraction",
      "sweep.n_grid", "sweep.schedules", "sweep.c1", "sweep.c2", "sweep.seeds",
      "sweep.weak_visit_budget", "sweep.weak_min_epochs", "sweep.eval_samples", "sweep.margin",
      "sweep.record_wall_time",
      "synth.n", "synth.m", "synth.corruption", "synth.keep_prob", "synth.coarse_d",
      "synth.annotator_accuracy", "synth.annotator_holdout_m",
      "train.n", "train.m",
      "fit.results", "fit.metric",
      "report.results",
      "check.quick",
  };
  return keys;
}

ws::Config load_config(const CommonArgs& args) {
  ws::Config cfg;
  if (!args.config_path.empty()) cfg = ws::Config::from_file(args.config_path);
  for (const auto& kv : args.overrides) cfg.apply_override(kv);
  cfg.require_known(known_keys(), {});
  return cfg;
}

// Config-key reference shown in --help; unknown keys are hard errors.
std::string config_key_footer() {
  std::string text = "Config keys (flat key = value lines; unknown keys are errors):\n";
  std::string line = " ";
  for (const auto& key : known_keys()) {
    if (line.size() + key.size() + 1 > 78) {
      text += line + "\n";
      line = " ";
    }
    line += " " + key;
  }
  if (line.size() > 1) text += line + "\n";
  return text;
}

ws::SyntheticProblem load_problem(const ws::Config& cfg) {
  if (cfg.has("problem.builtin")) {
    for (const auto& key : cfg.keys()) {
      if (key.rfind("problem.", 0) == 0 && key != "problem.builtin") {
        throw ws::ConfigError("problem.builtin excludes explicit problem fields, found: " + key);
      }
    }
    return ws::fixtures::problem_by_name(cfg.get_str("problem.builtin"));
  }
  return ws::problem_from_config(cfg);
}

void override_family(const ws::Config& cfg, const std::string& sec, ws::PredictorFamily& f) {
  if (cfg.has(sec + ".arch")) {
    const std::string arch = cfg.get_str(sec + ".arch");
    if (arch == "linear") {
      f.arch = ws::Arch::Linear;
    } else if (arch == "one_hidden") {
      f.arch = ws::Arch::OneHidden;
    } else {
      throw ws::ConfigError(sec + ".arch: unknown value '" + arch + "'");
    }
  }
  f.hidden = static_cast<int>(cfg.get_long_or(sec + ".hidden", f.hidden));
  f.use_bias = cfg.get_bool_or(sec + ".bias", f.use_bias);
  f.radius = cfg.get_double_or(sec + ".radius", f.radius);
  f.loss_bound = cfg.get_double_or(sec + ".bound", f.loss_bound);
  if (f.role == ws::Role::WeakMap && cfg.has(sec + ".head")) {
    const std::string head = cfg.get_str(sec + ".head");
    if (head == "trained") {
      f.head_mode = ws::HeadMode::Trained;
    } else if (head == "fixed_ones") {
      f.head_mode = ws::HeadMode::FixedOnes;
    } else {
      throw ws::ConfigError(sec + ".head: unknown value '" + head + "'");
    }
  }
  if (f.role == ws::Role::StrongPredictor && cfg.has(sec + ".loss")) {
    const std::string loss = cfg.get_str(sec + ".loss");
    if (loss == "cross_entropy") {
      f.loss = ws::StrongLoss::CrossEntropyClipped;
    } else if (loss == "squared") {
      f.loss = ws::StrongLoss::SquaredClipped;
    } else {
      throw ws::ConfigError(sec + ".loss: unknown value '" + loss + "'");
    }
  }
  f.family_id = f.default_id();
  f.validate();
}

void override_train(const ws::Config& cfg, const std::string& sec, ws::TrainConfig& t) {
  t.step_size = cfg.get_double_or(sec + ".step_size", t.step_size);
  t.decay = cfg.get_double_or(sec + ".decay", t.decay);
  t.batch_size = static_cast<int>(cfg.get_long_or(sec + ".batch_size", t.batch_size));
  t.max_epochs = static_cast<int>(cfg.get_long_or(sec + ".max_epochs", t.max_epochs));
  t.early_stop_every =
      static_cast<int>(cfg.get_long_or(sec + ".early_stop_every", t.early_stop_every));
  t.holdout_fraction = cfg.get_double_or(sec + ".holdout_fraction", t.holdout_fraction);
  t.validate();
}

ws::SweepPlan build_plan(const ws::Config& cfg, const CommonArgs& args) {
  ws::SweepPlan plan;
  if (cfg.has("problem.builtin")) {
    plan = ws::fixtures::default_sweep_plan(cfg.get_str("problem.builtin"), args.seed);
  } else {
    plan.problem = load_problem(cfg);
    plan.weak_family = ws::fixtures::default_weak_family(plan.problem);
    plan.strong_family = ws::fixtures::default_strong_family(plan.problem);
    plan.weak_train = ws::fixtures::default_weak_train();
    plan.strong_train = ws::fixtures::default_strong_train();
    plan.n_grid = {64, 128, 256, 512, 1024, 2048, 4096};
    plan.schedules = {{ws::Growth::Zero, 0.0}, {ws::Growth::Linear, 4.0},
                      {ws::Growth::Quadratic, 4.0 / 64.0}};
    plan.seeds = {1, 2, 3, 4};
    plan.weak_visit_budget = 600000;
  }
  plan.global_seed = args.seed;
  plan.workers = args.workers;

  override_family(cfg, "weak_family", plan.weak_family);
  override_family(cfg, "strong_family", plan.strong_family);
  override_train(cfg, "train_weak", plan.weak_train);
  override_train(cfg, "train_strong", plan.strong_train);

  if (cfg.has("sweep.n_grid")) plan.n_grid = cfg.get_longs("sweep.n_grid");
  double c1_default = 4.0, c2_default = 0.0;
  for (const auto& s : plan.schedules) {
    if (s.growth == ws::Growth::Linear) c1_default = s.coeff;
    if (s.growth == ws::Growth::Quadratic) c2_default = s.coeff;
  }
  const double c1 = cfg.get_double_or("sweep.c1", c1_default);
  const double c2 = cfg.get_double_or(
      "sweep.c2", c2_default > 0.0 ? c2_default : c1 / static_cast<double>(plan.n_grid.front()));
  if (cfg.has("sweep.schedules")) {
    plan.schedules.clear();
    for (const auto& name : ws::split_csv(cfg.get_str("sweep.schedules"))) {
      const ws::Growth g = ws::growth_from_name(name);
      const double coeff = g == ws::Growth::Linear ? c1 : (g == ws::Growth::Quadratic ? c2 : 0.0);
      plan.schedules.push_back({g, coeff});
    }
  } else if (cfg.has("sweep.c1") || cfg.has("sweep.c2")) {
    for (auto& s : plan.schedules) {
      if (s.growth == ws::Growth::Linear) s.coeff = c1;
      if (s.growth == ws::Growth::Quadratic) s.coeff = c2;
    }
  }
  if (cfg.has("sweep.seeds")) {
    plan.seeds.clear();
    for (long s : cfg.get_longs("sweep.seeds")) {
      plan.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  plan.weak_visit_budget = cfg.get_long_or("sweep.weak_visit_budget", plan.weak_visit_budget);
  plan.weak_min_epochs =
      static_cast<int>(cfg.get_long_or("sweep.weak_min_epochs", plan.weak_min_epochs));
  plan.eval_samples = cfg.get_long_or("sweep.eval_samples", plan.eval_samples);
  plan.record_wall_time = cfg.get_bool_or("sweep.record_wall_time", plan.record_wall_time);
  plan.validate();
  return plan;
}

void write_provenance(const ws::Config& cfg, const CommonArgs& args, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["global_seed"] = args.seed;
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(cfg.content_hash()));
  j["config_hash"] = hash;
  nlohmann::json values = nlohmann::json::object();
  for (const auto& key : cfg.keys()) values[key] = cfg.get_str(key);
  j["config"] = values;
  ws::write_text_file((fs::path(args.out_dir) / "provenance.json").string(), j.dump(2) + "\n");
}

ws::WeakCorruption corruption_from_config(const ws::Config& cfg,
                                          const ws::SyntheticProblem& problem,
                                          const CommonArgs& args) {
  const std::string kind = cfg.get_str_or("synth.corruption", "none");
  if (kind == "none") return ws::WeakCorruption::none();
  if (kind == "uniform") {
    return ws::WeakCorruption::uniform_noise(cfg.get_double_or("synth.keep_prob", 0.9),
                                             problem.weak_classes);
  }
  if (kind == "coarse") {
    return ws::WeakCorruption::coarse(static_cast<int>(cfg.get_long_or("synth.coarse_d", 5)));
  }
  if (kind == "annotator") {
    ws::PredictorFamily family = ws::fixtures::default_weak_family(problem);
    override_family(cfg, "weak_family", family);
    ws::TrainConfig tc = ws::fixtures::default_weak_train();
    override_train(cfg, "train_weak", tc);
    tc.seed = ws::derive_seed(args.seed, "annotator");
    const double target = cfg.get_double_or("synth.annotator_accuracy", 0.9);
    const long holdout = cfg.get_long_or("synth.annotator_holdout_m", 4000);
    return ws::WeakCorruption::from_annotator(
        ws::make_annotator(problem, family, target, holdout, tc));
  }
  throw ws::ConfigError("synth.corruption: unknown value '" + kind + "'");
}

int cmd_synth(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  const ws::SyntheticProblem problem = load_problem(cfg);
  fs::create_directories(args.out_dir);

  const long n = cfg.get_long_or("synth.n", 1000);
  const long m = cfg.get_long_or("synth.m", 0);
  const ws::Dataset strong =
      ws::sample_strong(problem, n, ws::derive_seed(args.seed, "cmd_synth_strong"));
  ws::write_dataset_csv(strong, (fs::path(args.out_dir) / "strong.csv").string());
  std::cout << "strong.csv: " << strong.rows() << " rows\n";
  if (m > 0) {
    const ws::WeakCorruption corruption = corruption_from_config(cfg, problem, args);
    const ws::Dataset weak =
        ws::sample_weak(problem, m, ws::derive_seed(args.seed, "cmd_synth_weak"), corruption);
    ws::write_dataset_csv(weak, (fs::path(args.out_dir) / "weak.csv").string());
    std::cout << "weak.csv: " << weak.rows() << " rows\n";
  }
  ws::problem_to_config(problem).write_file((fs::path(args.out_dir) / "problem.cfg").string());
  write_provenance(cfg, args, "synth");
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  ws::SweepPlan plan = build_plan(cfg, args);
  fs::create_directories(args.out_dir);

  const long n = cfg.get_long_or("train.n", 1024);
  const long m = cfg.get_long_or("train.m", 4096);
  plan.weak_train.seed = ws::derive_seed(args.seed, "cmd_train_weak");
  plan.strong_train.seed = ws::derive_seed(args.seed, "cmd_train_strong");
  if (m > 0 && plan.weak_visit_budget > 0 && !cfg.has("train_weak.max_epochs")) {
    const long epochs = plan.weak_visit_budget / m;
    plan.weak_train.max_epochs = static_cast<int>(std::clamp<long>(
        epochs, plan.weak_min_epochs, static_cast<long>(plan.weak_train.max_epochs)));
  }

  const ws::Dataset strong =
      ws::sample_strong(plan.problem, n, ws::derive_seed(args.seed, "cmd_train_strong_data"));
  ws::Dataset weak;
  const ws::Dataset* weak_ptr = nullptr;
  ws::TrainedModel weak_model;
  if (m > 0) {
    weak = ws::sample_weak(plan.problem, m, ws::derive_seed(args.seed, "cmd_train_weak_data"),
                           ws::WeakCorruption::none());
    weak_ptr = &weak;
    weak_model = ws::train_weak(plan.weak_family, weak, plan.weak_train);
  }
  const ws::ParamVector g_hat = weak_ptr != nullptr
                                    ? weak_model.params
                                    : ws::init_params(plan.weak_family, plan.weak_train.seed);
  const ws::Dataset augmented = ws::augment(strong, plan.weak_family, g_hat);
  const ws::TrainedModel strong_model =
      ws::train_strong(plan.strong_family, augmented, plan.strong_train);

  ws::write_params_csv(g_hat, (fs::path(args.out_dir) / "g_hat.csv").string());
  ws::write_params_csv(strong_model.params, (fs::path(args.out_dir) / "f_hat.csv").string());
  if (weak_ptr != nullptr) {
    ws::write_trajectory_csv(weak_model.trajectory,
                             (fs::path(args.out_dir) / "weak_trajectory.csv").string());
  }
  ws::write_trajectory_csv(strong_model.trajectory,
                           (fs::path(args.out_dir) / "strong_trajectory.csv").string());

  ws::Pipeline pipe;
  pipe.weak_family = plan.weak_family;
  pipe.g_hat = g_hat;
  pipe.strong_family = plan.strong_family;
  pipe.f_hat = strong_model.params;
  const double err = ws::population_error(plan.problem, pipe, plan.eval_samples, args.seed);
  const double ref = ws::reference_error(plan.problem, plan.eval_samples, args.seed);
  std::cout << "n=" << n << " m=" << m << " test_error=" << ws::fmt_full(err)
            << " excess=" << ws::fmt_full(err - ref) << "\n";

  const ws::EstimateMode mode =
      plan.problem.finite() ? ws::EstimateMode::Exact : ws::EstimateMode::MonteCarlo;
  ws::RunLedger ledger((fs::path(args.out_dir) / "theory_ledger.csv").string());
  ledger.append("test_error_01", mode, err, 0.0, 1.0, "pipeline");
  ledger.append("excess_risk_01", mode, err - ref, 0.0, 1.0, "reference=clean_label");
  if (plan.problem.finite() && weak_ptr != nullptr) {
    const double rate_m =
        ws::measure_rate_m(plan.problem, ws::view_of_trained(plan.weak_family, g_hat)).value;
    std::cout << "rate_m=" << ws::fmt_full(rate_m) << "\n";
    ledger.append("rate_m", ws::EstimateMode::Exact, rate_m, 0.0, 1.0, "trained g_hat");
  }
  write_provenance(cfg, args, "train");
  return kExitOk;
}

std::string gamma_report_text(const std::vector<ws::SweepRecord>& records,
                              const std::vector<ws::Schedule>& schedules, double margin) {
  std::string text;
  for (const ws::FitMetric metric : {ws::FitMetric::TestError, ws::FitMetric::ExcessRisk}) {
    text += "metric: " + ws::metric_name(metric) + "\n";
    std::map<std::string, ws::RateFit> fits;
    for (const auto& schedule : schedules) {
      std::vector<ws::SweepRecord> subset;
      for (const auto& rec : records) {
        if (rec.schedule == schedule.name()) subset.push_back(rec);
      }
      try {
        fits[schedule.name()] = ws::fit_rate(subset, metric);
      } catch (const std::exception& err) {
        text += "schedule=" + schedule.name() + " fit failed: " + err.what() + "\n";
      }
    }
    const ws::RateComparison cmp = ws::compare_rates(fits, margin);
    for (const auto& line : cmp.lines) text += line + "\n";
    text += "\n";
  }
  return text;
}

int cmd_sweep(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  const ws::SweepPlan plan = build_plan(cfg, args);
  fs::create_directories(args.out_dir);

  const std::vector<ws::SweepRecord> records = ws::run_sweep(plan);
  ws::write_records_csv(records, (fs::path(args.out_dir) / "results.csv").string());

  long failed = 0;
  for (const auto& rec : records) {
    if (rec.status != "ok") ++failed;
  }
  for (const ws::FitMetric metric : {ws::FitMetric::TestError, ws::FitMetric::ExcessRisk}) {
    const auto series = ws::plot_series_from_records(records, plan.schedules, metric);
    const std::string svg = ws::render_loglog_svg(
        series, "generalization vs n (" + ws::metric_name(metric) + ")", "n (strong examples)",
        ws::metric_name(metric));
    ws::write_text_file(
        (fs::path(args.out_dir) / ("plot_" + ws::metric_name(metric) + ".svg")).string(), svg);
  }
  const double margin = cfg.get_double_or("sweep.margin", 0.0);
  const std::string report = gamma_report_text(records, plan.schedules, margin);
  ws::write_text_file((fs::path(args.out_dir) / "gamma_report.txt").string(), report);
  std::cout << report;
  write_provenance(cfg, args, "sweep");

  if (failed > 0) {
    std::cerr << failed << "/" << records.size() << " cells failed\n";
    if (2 * failed > static_cast<long>(records.size())) return kExitRuntime;
  }
  return kExitOk;
}

int cmd_fit(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  const std::string path =
      cfg.get_str_or("fit.results", (fs::path(args.out_dir) / "results.csv").string());
  const auto records = ws::read_records_csv(path);
  std::vector<std::string> names;
  for (const auto& rec : records) {
    if (std::find(names.begin(), names.end(), rec.schedule) == names.end()) {
      names.push_back(rec.schedule);
    }
  }
  const std::string which = cfg.get_str_or("fit.metric", "both");
  std::string text;
  for (const ws::FitMetric metric : {ws::FitMetric::TestError, ws::FitMetric::ExcessRisk}) {
    if (which != "both" && which != ws::metric_name(metric)) continue;
    text += "metric: " + ws::metric_name(metric) + "\n";
    for (const auto& name : names) {
      std::vector<ws::SweepRecord> subset;
      for (const auto& rec : records) {
        if (rec.schedule == name) subset.push_back(rec);
      }
      try {
        const ws::RateFit fit = ws::fit_rate(subset, metric);
        text += "schedule=" + name + " gamma=" + ws::fmt_fixed(fit.gamma, 4) + " C=" +
                ws::fmt_fixed(std::exp(fit.log_c), 6) + " r2=" + ws::fmt_fixed(fit.r_squared, 4) +
                " points=" + std::to_string(fit.point_count) + " excluded=" +
                std::to_string(fit.excluded) + "\n";
      } catch (const std::exception& err) {
        text += "schedule=" + name + " fit failed: " + err.what() + "\n";
      }
    }
  }
  std::cout << text;
  fs::create_directories(args.out_dir);
  ws::write_text_file((fs::path(args.out_dir) / "fit_report.txt").string(), text);
  return kExitOk;
}

int cmd_report(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  const std::string path =
      cfg.get_str_or("report.results", (fs::path(args.out_dir) / "results.csv").string());
  const auto records = ws::read_records_csv(path);
  std::vector<ws::Schedule> schedules;
  for (const auto& rec : records) {
    bool seen = false;
    for (const auto& s : schedules) {
      if (s.name() == rec.schedule) seen = true;
    }
    if (!seen) schedules.push_back({ws::growth_from_name(rec.schedule), 0.0});
  }
  const std::string text =
      gamma_report_text(records, schedules, cfg.get_double_or("sweep.margin", 0.0));
  std::cout << text;
  fs::create_directories(args.out_dir);
  ws::write_text_file((fs::path(args.out_dir) / "gamma_report.txt").string(), text);
  return kExitOk;
}

// Estimator values for the audit fixtures, appended to the run ledger.
void write_check_ledger(const std::string& out_dir) {
  const std::string path = (fs::path(out_dir) / "theory_ledger.csv").string();
  std::remove(path.c_str());
  ws::RunLedger ledger(path);
  const double eta = 1.0;
  for (const auto& fx : ws::fixtures::make_audit_fixtures()) {
    const ws::AtomList p_atoms = ws::distribution_p(fx.problem);
    const auto probes = fx.all_probe_losses();
    const auto eps_p =
        ws::central_condition_eps(probes, fx.star_loss(), p_atoms, eta, fx.name + ":star");
    ledger.append("epsilon_hat[" + fx.name + ":P]", eps_p.mode, eps_p.epsilon_hat, 0.0, eta,
                  "probes=" + std::to_string(eps_p.family_sample_size));
    for (std::size_t gi = 0; gi < fx.g_hats.size(); ++gi) {
      const auto& g_hat = fx.g_hats[gi];
      const ws::AtomList phat = ws::distribution_p_hat(fx.problem, g_hat.latent);
      const auto eps_phat =
          ws::central_condition_eps(probes, fx.star_loss(), phat, eta, fx.name + ":star");
      const auto rate = ws::measure_rate_m(fx.problem, g_hat);
      const auto rate_n = ws::measure_rate_n(phat, fx.probe_loss(1), fx.star_loss());
      const std::string tag = fx.name + ":g" + std::to_string(gi);
      ledger.append("rate_m[" + tag + "]", rate, eta, "corrupted copy of g0");
      ledger.append("epsilon_hat[" + tag + ":Phat]", eps_phat.mode, eps_phat.epsilon_hat, 0.0,
                    eta, "");
      const double excess = ws::exact_risk(phat, fx.probe_loss(1), "strong").value -
                            ws::exact_risk(p_atoms, fx.star_loss(), "strong").value;
      const auto rep =
          ws::decomposition_check(excess, rate.value, rate_n.value, fx.analytic_l, true, true);
      ledger.append("decomposition_slack[" + tag + "]", ws::EstimateMode::Exact, rep.slack, 0.0,
                    eta, "L=" + ws::fmt_full(fx.analytic_l));
    }
  }
}

int cmd_check(const CommonArgs& args) {
  const ws::Config cfg = load_config(args);
  const bool quick = cfg.get_bool_or("check.quick", false);
  const auto results = ws::checks::run_all(quick);
  bool all_pass = true;
  std::string text;
  for (const auto& res : results) {
    const std::string line =
        std::string(res.pass ? "[PASS] " : "[FAIL] ") + res.name + ": " + res.details;
    std::cout << line << "\n";
    text += line + "\n";
    all_pass = all_pass && res.pass;
  }
  fs::create_directories(args.out_dir);
  ws::write_text_file((fs::path(args.out_dir) / "check_report.txt").string(), text);
  write_check_ledger(args.out_dir);
  return all_pass ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-to-strong feature transfer: synthetic benchmarks, rate sweeps, and "
               "theory estimators"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&args](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "flat key=value config file");
    sub->add_option("--out", args.out_dir, "output directory")->capture_default_str();
    sub->add_option("--set", args.overrides, "config override key=value (repeatable)");
    sub->add_option("--seed", args.seed, "global seed; all component streams derive from it")
        ->capture_default_str();
    sub->add_option("--workers", args.workers, "worker threads for sweep cells")
        ->capture_default_str();
  };

  CLI::App* synth = app.add_subcommand("synth", "materialize strong/weak datasets as CSV");
  CLI::App* train = app.add_subcommand("train", "run the two-stage pipeline once");
  CLI::App* sweep = app.add_subcommand("sweep", "run the (n, m-schedule) grid and fit rates");
  CLI::App* fit = app.add_subcommand("fit", "fit power laws to an existing results.csv");
  CLI::App* check = app.add_subcommand("check", "run the invariant check suite");
  CLI::App* report = app.add_subcommand("report", "gamma table for an existing results.csv");
  const std::string footer = config_key_footer();
  app.footer(footer);
  for (CLI::App* sub : {synth, train, sweep, fit, check, report}) {
    add_common(sub);
    sub->footer(footer);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (train->parsed()) return cmd_train(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (fit->parsed()) return cmd_fit(args);
    if (check->parsed()) return cmd_check(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const ws::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
