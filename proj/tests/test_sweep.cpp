#include "weaksup/checks.hpp"
#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/sweep.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

using namespace weaksup;

namespace {

SweepPlan tiny_plan() {
  SweepPlan plan = fixtures::default_sweep_plan("fastrate", 17);
  plan.n_grid = {16, 32, 64};
  plan.seeds = {1, 2};
  plan.weak_train.max_epochs = 10;
  plan.strong_train.max_epochs = 15;
  plan.weak_visit_budget = 20000;
  return plan;
}

SweepRecord synthetic_record(const std::string& schedule, long n, std::uint64_t seed,
                             double err) {
  SweepRecord rec;
  rec.schedule = schedule;
  rec.n = n;
  rec.seed = seed;
  rec.test_error = err;
  rec.excess_risk = err;
  return rec;
}

}  // namespace

TEST_CASE("weak_size follows the growth schedules") {
  CHECK(weak_size(1000, {Growth::Linear, 4.0}) == 4000);
  CHECK(weak_size(1000, {Growth::Quadratic, 0.02}) == 20000);
  CHECK(weak_size(12345, {Growth::Zero, 0.0}) == 0);
  CHECK(weak_size(3, {Growth::Linear, 0.5}) == 2);  // rounds
}

TEST_CASE("fit_rate recovers exact and noisy power laws") {
  const auto res = checks::powerlaw_recovery();
  INFO(res.details);
  CHECK(res.pass);
}

TEST_CASE("fit_rate on a flat curve gives gamma = 0") {
  std::vector<SweepRecord> records{synthetic_record("zero", 10, 1, 0.3),
                                   synthetic_record("zero", 100, 1, 0.3),
                                   synthetic_record("zero", 1000, 1, 0.3)};
  const RateFit fit = fit_rate(records, FitMetric::TestError);
  CHECK(fit.gamma == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fit.r_squared == 1.0);
}

TEST_CASE("fit_rate excludes nonpositive points and needs three survivors") {
  std::vector<SweepRecord> records{
      synthetic_record("zero", 10, 1, 0.2), synthetic_record("zero", 100, 1, 0.02),
      synthetic_record("zero", 1000, 1, 0.002), synthetic_record("zero", 10000, 1, 0.0)};
  const RateFit fit = fit_rate(records, FitMetric::TestError);
  CHECK(fit.excluded == 1);
  CHECK(fit.point_count == 3);
  CHECK(fit.gamma == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<SweepRecord> too_few{synthetic_record("zero", 10, 1, 0.1),
                                   synthetic_record("zero", 100, 1, 0.0),
                                   synthetic_record("zero", 1000, 1, 0.0)};
  CHECK_THROWS(fit_rate(too_few, FitMetric::TestError));
}

TEST_CASE("fit_rate aggregates the mean over seeds and ignores order") {
  std::vector<SweepRecord> records{
      synthetic_record("zero", 10, 1, 0.25),  synthetic_record("zero", 10, 2, 0.15),
      synthetic_record("zero", 100, 1, 0.025), synthetic_record("zero", 100, 2, 0.015),
      synthetic_record("zero", 1000, 1, 0.0025), synthetic_record("zero", 1000, 2, 0.0015)};
  const RateFit fit = fit_rate(records, FitMetric::TestError);
  std::reverse(records.begin(), records.end());
  const RateFit reversed = fit_rate(records, FitMetric::TestError);
  CHECK(fit.gamma == reversed.gamma);
  CHECK(fit.log_c == reversed.log_c);
  CHECK(fit.r_squared == reversed.r_squared);
  CHECK(fit.gamma == doctest::Approx(1.0).epsilon(1e-12));  // means follow 0.2/n
}

TEST_CASE("compare_rates reproduces the reported orderings") {
  std::map<std::string, RateFit> fits;
  fits["zero"].gamma = 0.46;
  fits["quadratic"].gamma = 0.97;
  const RateComparison cmp = compare_rates(fits, 0.0);
  CHECK(cmp.ordering_pass);
  CHECK(cmp.quad_minus_zero == doctest::Approx(0.51).epsilon(1e-12));

  fits["zero"].gamma = 0.89;
  fits["quadratic"].gamma = 1.52;
  CHECK(compare_rates(fits, 0.0).ordering_pass);

  fits["zero"].gamma = 0.5;
  fits["quadratic"].gamma = 0.4;
  CHECK_FALSE(compare_rates(fits, 0.0).ordering_pass);

  std::map<std::string, RateFit> partial;
  partial["zero"].gamma = 0.5;
  const RateComparison missing = compare_rates(partial, 0.0);
  CHECK_FALSE(missing.complete);
}

TEST_CASE("run_sweep: record counts, schedules, and determinism") {
  const SweepPlan plan = tiny_plan();
  const auto records = run_sweep(plan);
  CHECK(records.size() == plan.schedules.size() * plan.n_grid.size() * plan.seeds.size());

  for (const auto& rec : records) {
    const auto it = std::find_if(plan.schedules.begin(), plan.schedules.end(),
                                 [&](const Schedule& s) { return s.name() == rec.schedule; });
    REQUIRE(it != plan.schedules.end());
    CHECK(rec.m == weak_size(rec.n, *it));
    if (rec.schedule == "zero") CHECK(rec.m == 0);
    CHECK(rec.status == "ok");
    CHECK(rec.test_error >= 0.0);
    CHECK(rec.test_error <= 1.0);
  }

  // Deterministic rerun, and worker count cannot change the records.
  const auto again = run_sweep(plan);
  SweepPlan threaded = plan;
  threaded.workers = 3;
  const auto parallel = run_sweep(threaded);
  const std::string path_a = "/tmp/weaksup_records_a.csv";
  const std::string path_b = "/tmp/weaksup_records_b.csv";
  const std::string path_c = "/tmp/weaksup_records_c.csv";
  write_records_csv(records, path_a);
  write_records_csv(again, path_b);
  write_records_csv(parallel, path_c);
  const auto bytes = [](const std::string& p) {
    std::string all;
    for (const auto& line : read_lines(p)) all += line + "\n";
    return all;
  };
  CHECK(bytes(path_a) == bytes(path_b));
  CHECK(bytes(path_a) == bytes(path_c));
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
  std::remove(path_c.c_str());
}

TEST_CASE("run_sweep records failed cells instead of dropping them") {
  SweepPlan plan = tiny_plan();
  // A strong family with a mismatched latent width fails in every cell.
  plan.strong_family = PredictorFamily::strong_predictor(
      plan.problem.input_dim, plan.problem.latent_dim + 1, 2, Arch::Linear, 0, 10.0,
      StrongLoss::SquaredClipped, 10.0);
  const auto records = run_sweep(plan);
  CHECK(records.size() == plan.schedules.size() * plan.n_grid.size() * plan.seeds.size());
  for (const auto& rec : records) {
    CHECK(rec.status.rfind("error:", 0) == 0);
    CHECK(std::isnan(rec.test_error));
  }
  CHECK_THROWS(fit_rate(records, FitMetric::TestError));
}

TEST_CASE("records csv round-trip") {
  const SweepPlan plan = tiny_plan();
  auto records = run_sweep(plan);
  records[0].status = "error: simulated failure, with comma";
  const std::string path = "/tmp/weaksup_records_rt.csv";
  write_records_csv(records, path);
  const auto back = read_records_csv(path);
  REQUIRE(back.size() == records.size());
  CHECK(back[0].status == records[0].status);
  CHECK(back[3].n == records[3].n);
  CHECK(back[3].m == records[3].m);
  // NaN metrics round-trip as NaN, finite ones exactly.
  for (std::size_t i = 1; i < back.size(); ++i) {
    CHECK(back[i].test_error == records[i].test_error);
    CHECK(back[i].excess_risk == records[i].excess_risk);
  }
  std::remove(path.c_str());
}

TEST_CASE("svg rendering is deterministic and carries the legend") {
  PlotSeries series;
  series.label = "m=c1*n";
  series.x = {64, 128, 256};
  series.mean = {0.2, 0.1, 0.05};
  series.lo = {0.15, 0.08, 0.04};
  series.hi = {0.25, 0.12, 0.06};
  const std::string a = render_loglog_svg({series}, "demo", "n", "error");
  const std::string b = render_loglog_svg({series}, "demo", "n", "error");
  CHECK(a == b);
  CHECK(a.find("polyline") != std::string::npos);
  CHECK(a.find("m=c1*n") != std::string::npos);
  CHECK(a.find("<svg") == 0);
}

TEST_CASE("plot series aggregate seed bands") {
  std::vector<SweepRecord> records{
      synthetic_record("linear", 10, 1, 0.3), synthetic_record("linear", 10, 2, 0.1),
      synthetic_record("linear", 100, 1, 0.03), synthetic_record("linear", 100, 2, 0.01)};
  const auto series =
      plot_series_from_records(records, {{Growth::Linear, 4.0}}, FitMetric::TestError);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].x.size() == 2);
  CHECK(series[0].mean[0] == doctest::Approx(0.2));
  CHECK(series[0].lo[0] == 0.1);
  CHECK(series[0].hi[0] == 0.3);
}
