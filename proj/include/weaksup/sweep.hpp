#pragma once

#include "weaksup/synth.hpp"
#include "weaksup/theory.hpp"
#include "weaksup/training.hpp"

#include <map>
#include <string>
#include <vector>

namespace weaksup {

enum class Growth { Zero, Linear, Quadratic };

std::string growth_name(Growth g);
Growth growth_from_name(const std::string& name);

struct Schedule {
  Growth growth = Growth::Zero;
  double coeff = 0.0;  // c1 for Linear, c2 for Quadratic

  std::string name() const { return growth_name(growth); }
  std::string legend_label() const;
};

// Zero -> 0, Linear -> round(c1 n), Quadratic -> round(c2 n^2).
long weak_size(long n, const Schedule& schedule);

struct SweepRecord {
  std::string schedule;
  long n = 0;
  long m = 0;
  std::uint64_t seed = 0;
  double test_error = 0.0;
  double excess_risk = 0.0;
  double rate_m = 0.0;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

struct SweepPlan {
  SyntheticProblem problem;
  PredictorFamily weak_family;
  PredictorFamily strong_family;
  TrainConfig weak_train;
  TrainConfig strong_train;
  std::vector<long> n_grid;
  std::vector<Schedule> schedules;
  std::vector<std::uint64_t> seeds;
  std::uint64_t global_seed = 0;
  int workers = 1;
  // Weak-training work is held constant across m by running about
  // visit_budget/m epochs (at least min_epochs), mirroring training weak
  // models "to convergence" at every m.
  long weak_visit_budget = 0;  // 0 disables the scaling
  int weak_min_epochs = 1;
  long eval_samples = 20000;  // generative problems only
  bool record_wall_time = false;

  void validate() const;
};

std::vector<SweepRecord> run_sweep(const SweepPlan& plan);

// Exact (finite support) or Monte Carlo 0/1 risk of a pipeline, plus the
// best achievable reference risk on the same problem.
double population_error(const SyntheticProblem& problem, const Pipeline& pipe, long eval_samples,
                        std::uint64_t eval_seed);
double reference_error(const SyntheticProblem& problem, long eval_samples,
                       std::uint64_t eval_seed);

struct RateFit {
  double gamma = 0.0;
  double log_c = 0.0;
  double r_squared = 0.0;
  int point_count = 0;
  int excluded = 0;
};

enum class FitMetric { TestError, ExcessRisk };
std::string metric_name(FitMetric metric);

// OLS of log(mean-over-seeds error) on log(n); gamma is the negative slope.
// Points with nonpositive aggregated error are excluded; fewer than 3
// surviving points is an error.
RateFit fit_rate(const std::vector<SweepRecord>& records, FitMetric metric);

struct RateComparison {
  std::map<std::string, RateFit> fits;
  std::vector<std::string> lines;
  bool ordering_pass = false;
  bool complete = true;  // false when zero/quadratic fits are missing
  double quad_minus_zero = 0.0;
};

RateComparison compare_rates(const std::map<std::string, RateFit>& fits, double margin);

void write_records_csv(const std::vector<SweepRecord>& records, const std::string& path);
std::vector<SweepRecord> read_records_csv(const std::string& path);

// --- plotting ---------------------------------------------------------------

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

// Log-log plot: one polyline per schedule with a min/max band over seeds.
std::string render_loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label);

std::vector<PlotSeries> plot_series_from_records(const std::vector<SweepRecord>& records,
                                                 const std::vector<Schedule>& schedules,
                                                 FitMetric metric);

}  // namespace weaksup
