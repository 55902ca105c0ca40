#include "weaksup/sweep.hpp"

#include "weaksup/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace weaksup {

std::string growth_name(Growth g) {
  switch (g) {
    case Growth::Zero:
      return "zero";
    case Growth::Linear:
      return "linear";
    case Growth::Quadratic:
      return "quadratic";
  }
  return "?";
}

Growth growth_from_name(const std::string& name) {
  if (name == "zero") return Growth::Zero;
  if (name == "linear") return Growth::Linear;
  if (name == "quadratic") return Growth::Quadratic;
  throw ConfigError("unknown growth schedule: " + name);
}

std::string Schedule::legend_label() const {
  switch (growth) {
    case Growth::Zero:
      return "m=0";
    case Growth::Linear:
      return "m=c1*n";
    case Growth::Quadratic:
      return "m=c2*n^2";
  }
  return "?";
}

long weak_size(long n, const Schedule& schedule) {
  require(n >= 1, "weak_size: n must be >= 1");
  switch (schedule.growth) {
    case Growth::Zero:
      return 0;
    case Growth::Linear:
      return std::lround(schedule.coeff * static_cast<double>(n));
    case Growth::Quadratic:
      return std::lround(schedule.coeff * static_cast<double>(n) * static_cast<double>(n));
  }
  return 0;
}

void SweepPlan::validate() const {
  problem.validate();
  weak_family.validate();
  strong_family.validate();
  require(n_grid.size() >= 3, "sweep: n_grid needs at least 3 points for a slope");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    require(n_grid[i] > n_grid[i - 1], "sweep: n_grid must be strictly increasing");
  }
  require(!schedules.empty(), "sweep: no schedules configured");
  for (const auto& s : schedules) {
    if (s.growth != Growth::Zero) require(s.coeff > 0.0, "sweep: schedule coefficient must be > 0");
  }
  require(!seeds.empty(), "sweep: no seeds configured");
  require(workers >= 1, "sweep: worker count must be >= 1");
}

namespace {

// Clean-label Bayes mix: P(Y = c | x) is 1 - p_flip on the clean class and
// p_flip/(k-1) elsewhere.
double error_given_prediction(const LabelLaw& law, int clean, int predicted) {
  if (law.p_flip <= 0.0) return predicted == clean ? 0.0 : 1.0;
  const double clean_mass = 1.0 - law.p_flip;
  const double other_mass = law.p_flip / static_cast<double>(law.num_classes - 1);
  return 1.0 - (predicted == clean ? clean_mass : other_mass);
}

Matrix eval_inputs(const SyntheticProblem& problem, long eval_samples, std::uint64_t eval_seed) {
  if (problem.finite()) return problem.finite_support().atoms;
  Rng rng(derive_seed(eval_seed, "eval_inputs"));
  Matrix x(eval_samples, problem.input_dim);
  const auto& gen = std::get<GenerativeSupport>(problem.support);
  for (long i = 0; i < eval_samples; ++i) {
    const Vector row = gen.law == SampleLaw::UniformCube
                           ? rng.uniform_vector(problem.input_dim, -gen.scale, gen.scale)
                           : rng.normal_vector(problem.input_dim) * gen.scale;
    x.row(i) = row.transpose();
  }
  return x;
}

}  // namespace

double population_error(const SyntheticProblem& problem, const Pipeline& pipe, long eval_samples,
                        std::uint64_t eval_seed) {
  const Matrix x = eval_inputs(problem, eval_samples, eval_seed);
  const Matrix scores = pipe.scores_rows(x);
  const Matrix z_true = problem.g0.apply_rows(x);
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index pred = 0;
    scores.row(i).maxCoeff(&pred);
    const int clean = problem.label_law.clean_label(x.row(i).transpose(), z_true.row(i).transpose());
    const double weight = problem.finite() ? problem.finite_support().probs[i]
                                           : 1.0 / static_cast<double>(x.rows());
    total += weight * error_given_prediction(problem.label_law, clean, static_cast<int>(pred));
  }
  return total;
}

double reference_error(const SyntheticProblem& problem, long eval_samples,
                       std::uint64_t eval_seed) {
  // Risk of the clean-label predictor, which is Bayes when p_flip < (k-1)/k.
  const Matrix x = eval_inputs(problem, eval_samples, eval_seed);
  const Matrix z_true = problem.g0.apply_rows(x);
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const int clean = problem.label_law.clean_label(x.row(i).transpose(), z_true.row(i).transpose());
    const double weight = problem.finite() ? problem.finite_support().probs[i]
                                           : 1.0 / static_cast<double>(x.rows());
    total += weight * error_given_prediction(problem.label_law, clean, clean);
  }
  return total;
}

namespace {

SweepRecord run_cell(const SweepPlan& plan, const Schedule& schedule, long n, std::uint64_t seed,
                     double reference) {
  SweepRecord rec;
  rec.schedule = schedule.name();
  rec.n = n;
  rec.seed = seed;
  rec.m = weak_size(n, schedule);
  const auto started = std::chrono::steady_clock::now();
  try {
    std::uint64_t cell = derive_seed(plan.global_seed, "sweep_cell");
    cell = mix_seed(cell, fnv1a(rec.schedule));
    cell = mix_seed(cell, static_cast<std::uint64_t>(n));
    cell = mix_seed(cell, seed);

    TrainConfig weak_cfg = plan.weak_train;
    weak_cfg.seed = derive_seed(cell, "weak_train");
    TrainConfig strong_cfg = plan.strong_train;
    strong_cfg.seed = derive_seed(cell, "strong_train");

    Dataset weak_data;
    const Dataset* weak_ptr = nullptr;
    if (rec.m > 0) {
      weak_data =
          sample_weak(plan.problem, rec.m, derive_seed(cell, "weak_data"), WeakCorruption::none());
      weak_ptr = &weak_data;
      if (plan.weak_visit_budget > 0) {
        const long epochs = plan.weak_visit_budget / std::max<long>(rec.m, 1);
        weak_cfg.max_epochs = static_cast<int>(std::clamp<long>(
            epochs, plan.weak_min_epochs, static_cast<long>(plan.weak_train.max_epochs)));
      }
    }
    const Dataset strong_data =
        sample_strong(plan.problem, n, derive_seed(cell, "strong_data"));

    const Pipeline pipe = run_pipeline(plan.problem, weak_ptr, strong_data, plan.weak_family,
                                       plan.strong_family, weak_cfg, strong_cfg);

    rec.test_error = population_error(plan.problem, pipe, plan.eval_samples, plan.global_seed);
    rec.excess_risk = rec.test_error - reference;
    if (plan.problem.finite()) {
      rec.rate_m =
          measure_rate_m(plan.problem, view_of_trained(plan.weak_family, pipe.g_hat)).value;
    } else {
      rec.rate_m = std::numeric_limits<double>::quiet_NaN();
    }
  } catch (const std::exception& err) {
    rec.status = std::string("error: ") + err.what();
    rec.test_error = std::numeric_limits<double>::quiet_NaN();
    rec.excess_risk = std::numeric_limits<double>::quiet_NaN();
    rec.rate_m = std::numeric_limits<double>::quiet_NaN();
  }
  if (plan.record_wall_time) {
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return rec;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepPlan& plan) {
  plan.validate();
  const double reference = reference_error(plan.problem, plan.eval_samples, plan.global_seed);

  struct Cell {
    const Schedule* schedule;
    long n;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& schedule : plan.schedules) {
    for (long n : plan.n_grid) {
      for (std::uint64_t seed : plan.seeds) cells.push_back({&schedule, n, seed});
    }
  }

  std::vector<SweepRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      records[i] = run_cell(plan, *cells[i].schedule, cells[i].n, cells[i].seed, reference);
    }
  };
  const int threads = std::min<int>(plan.workers, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

std::string metric_name(FitMetric metric) {
  return metric == FitMetric::TestError ? "test_error" : "excess_risk";
}

RateFit fit_rate(const std::vector<SweepRecord>& records, FitMetric metric) {
  std::map<long, std::pair<double, int>> by_n;  // n -> (sum, count)
  for (const auto& rec : records) {
    if (rec.status != "ok") continue;
    const double v = metric == FitMetric::TestError ? rec.test_error : rec.excess_risk;
    if (!std::isfinite(v)) continue;
    auto& acc = by_n[rec.n];
    acc.first += v;
    acc.second += 1;
  }

  std::vector<double> log_n, log_err;
  RateFit fit;
  for (const auto& kv : by_n) {
    const double mean = kv.second.first / static_cast<double>(kv.second.second);
    if (mean <= 0.0) {
      ++fit.excluded;  // log of a nonpositive error is undefined
      continue;
    }
    log_n.push_back(std::log(static_cast<double>(kv.first)));
    log_err.push_back(std::log(mean));
  }
  fit.point_count = static_cast<int>(log_n.size());
  if (fit.point_count < 3) {
    throw Error("fit_rate: only " + std::to_string(fit.point_count) +
                " usable points (need at least 3); " + std::to_string(fit.excluded) +
                " excluded as nonpositive");
  }

  const double count = static_cast<double>(fit.point_count);
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < fit.point_count; ++i) {
    mx += log_n[static_cast<std::size_t>(i)];
    my += log_err[static_cast<std::size_t>(i)];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < fit.point_count; ++i) {
    const double dx = log_n[static_cast<std::size_t>(i)] - mx;
    const double dy = log_err[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  fit.gamma = -slope;
  fit.log_c = my - slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < fit.point_count; ++i) {
    const double pred = fit.log_c + slope * log_n[static_cast<std::size_t>(i)];
    const double r = log_err[static_cast<std::size_t>(i)] - pred;
    ss_res += r * r;
  }
  if (syy <= 1e-300) {
    fit.r_squared = ss_res <= 1e-300 ? 1.0 : 0.0;
  } else {
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

RateComparison compare_rates(const std::map<std::string, RateFit>& fits, double margin) {
  RateComparison cmp;
  cmp.fits = fits;
  for (const auto& kv : fits) {
    cmp.lines.push_back("schedule=" + kv.first + " gamma=" + fmt_fixed(kv.second.gamma, 4) +
                        " C=" + fmt_fixed(std::exp(kv.second.log_c), 6) +
                        " r2=" + fmt_fixed(kv.second.r_squared, 4) +
                        " points=" + std::to_string(kv.second.point_count) +
                        " excluded=" + std::to_string(kv.second.excluded));
  }
  const auto zero = fits.find("zero");
  const auto linear = fits.find("linear");
  const auto quadratic = fits.find("quadratic");
  if (zero == fits.end() || quadratic == fits.end()) {
    cmp.complete = false;
    cmp.ordering_pass = false;
    cmp.lines.push_back("warning: zero/quadratic fits missing; ordering not evaluated");
    return cmp;
  }
  bool pass = true;
  if (linear != fits.end()) {
    pass = linear->second.gamma >= zero->second.gamma - margin &&
           quadratic->second.gamma >= linear->second.gamma - margin;
    cmp.lines.push_back("gamma_linear - gamma_zero = " +
                        fmt_fixed(linear->second.gamma - zero->second.gamma, 4));
    cmp.lines.push_back("gamma_quadratic - gamma_linear = " +
                        fmt_fixed(quadratic->second.gamma - linear->second.gamma, 4));
  } else {
    pass = quadratic->second.gamma >= zero->second.gamma - margin;
  }
  cmp.quad_minus_zero = quadratic->second.gamma - zero->second.gamma;
  cmp.lines.push_back("gamma_quadratic - gamma_zero = " + fmt_fixed(cmp.quad_minus_zero, 4));
  cmp.ordering_pass = pass;
  cmp.lines.push_back(std::string("ordering zero<=linear<=quadratic (margin=") +
                      fmt_fixed(margin, 4) + "): " + (pass ? "pass" : "FAIL"));
  return cmp;
}

void write_records_csv(const std::vector<SweepRecord>& records, const std::string& path) {
  std::string out = "schedule,n,m,seed,test_error,excess_risk,rate_m,wall_time_s,status\n";
  for (const auto& rec : records) {
    out += rec.schedule + "," + std::to_string(rec.n) + "," + std::to_string(rec.m) + "," +
           std::to_string(rec.seed) + "," + fmt_full(rec.test_error) + "," +
           fmt_full(rec.excess_risk) + "," + fmt_full(rec.rate_m) + "," +
           fmt_fixed(rec.wall_time_s, 3) + "," + rec.status + "\n";
  }
  write_text_file(path, out);
}

std::vector<SweepRecord> read_records_csv(const std::string& path) {
  const auto lines = read_lines(path);
  require(!lines.empty(), "records csv: empty file " + path);
  require(lines[0] == "schedule,n,m,seed,test_error,excess_risk,rate_m,wall_time_s,status",
          "records csv: unexpected header in " + path);
  std::vector<SweepRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_line(lines[i]);
    require(f.size() >= 9, "records csv: bad row in " + path);
    SweepRecord rec;
    rec.schedule = f[0];
    rec.n = parse_long(f[1], "n");
    rec.m = parse_long(f[2], "m");
    rec.seed = std::stoull(f[3]);
    rec.test_error = parse_double(f[4], "test_error");
    rec.excess_risk = parse_double(f[5], "excess_risk");
    rec.rate_m = parse_double(f[6], "rate_m");
    rec.wall_time_s = parse_double(f[7], "wall_time_s");
    rec.status = f[8];
    // Commas inside an error message would have been split; stitch back.
    for (std::size_t j = 9; j < f.size(); ++j) rec.status += "," + f[j];
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<PlotSeries> plot_series_from_records(const std::vector<SweepRecord>& records,
                                                 const std::vector<Schedule>& schedules,
                                                 FitMetric metric) {
  std::vector<PlotSeries> out;
  for (const auto& schedule : schedules) {
    PlotSeries series;
    series.label = schedule.legend_label();
    std::map<long, std::vector<double>> by_n;
    for (const auto& rec : records) {
      if (rec.schedule != schedule.name() || rec.status != "ok") continue;
      const double v = metric == FitMetric::TestError ? rec.test_error : rec.excess_risk;
      if (std::isfinite(v)) by_n[rec.n].push_back(v);
    }
    for (const auto& kv : by_n) {
      double lo = kv.second[0], hi = kv.second[0], sum = 0.0;
      for (double v : kv.second) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      series.x.push_back(static_cast<double>(kv.first));
      series.mean.push_back(sum / static_cast<double>(kv.second.size()));
      series.lo.push_back(lo);
      series.hi.push_back(hi);
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace weaksup
