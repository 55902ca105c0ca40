#include "weaksup/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(WEAKSUP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const char* kTinySweepConfig =
    "problem.builtin = fastrate\n"
    "sweep.n_grid = 16,32,64\n"
    "sweep.seeds = 1,2\n"
    "sweep.weak_visit_budget = 20000\n"
    "train_weak.max_epochs = 10\n"
    "train_strong.max_epochs = 15\n";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help") == 0);
  CHECK(run("sweep --config /nonexistent/path.cfg") == 1);
  CHECK(run("") != 0);
}

TEST_CASE("unknown config keys are rejected with exit code 1") {
  CHECK(run("synth --out /tmp/weaksup_cli_bad --set problem.builtin=fastrate "
            "--set synth.typo_key=1") == 1);
}

TEST_CASE("synth writes row-exact csv files and is idempotent") {
  const fs::path out = "/tmp/weaksup_cli_synth";
  fs::remove_all(out);
  CHECK(run("synth --out " + out.string() +
            " --set problem.builtin=fastrate --set synth.n=100 --set synth.m=50") == 0);
  const auto strong = weaksup::read_lines((out / "strong.csv").string());
  CHECK(strong.size() == 3 + 100);  // metadata, header, column names, rows
  const auto weak = weaksup::read_lines((out / "weak.csv").string());
  CHECK(weak.size() == 3 + 50);

  const std::string first = slurp(out / "strong.csv");
  CHECK(run("synth --out " + out.string() +
            " --set problem.builtin=fastrate --set synth.n=100 --set synth.m=50") == 0);
  CHECK(slurp(out / "strong.csv") == first);
  fs::remove_all(out);
}

TEST_CASE("synth coarse corruption folds weak labels into {0..d-1}") {
  const fs::path out = "/tmp/weaksup_cli_coarse";
  fs::remove_all(out);
  CHECK(run("synth --out " + out.string() +
            " --set problem.builtin=default_cat --set synth.n=10 --set synth.m=300 "
            "--set synth.corruption=coarse --set synth.coarse_d=5") == 0);
  const auto weak = weaksup::read_lines((out / "weak.csv").string());
  for (std::size_t i = 3; i < weak.size(); ++i) {
    const auto fields = weaksup::split_line(weak[i]);
    const double w = std::stod(fields.back());
    CHECK(w >= 0.0);
    CHECK(w <= 4.0);
  }
  fs::remove_all(out);
}

TEST_CASE("sweep produces artifacts and reruns byte-identically") {
  const fs::path out = "/tmp/weaksup_cli_sweep";
  fs::remove_all(out);
  const fs::path cfg = "/tmp/weaksup_cli_sweep.cfg";
  weaksup::write_text_file(cfg.string(), kTinySweepConfig);

  CHECK(run("sweep --config " + cfg.string() + " --out " + out.string() + " --workers 2") == 0);
  const auto rows = weaksup::read_lines((out / "results.csv").string());
  CHECK(rows.size() == 1 + 3 * 3 * 2);  // header + schedules x grid x seeds
  CHECK(fs::exists(out / "plot_test_error.svg"));
  CHECK(fs::exists(out / "plot_excess_risk.svg"));
  CHECK(fs::exists(out / "gamma_report.txt"));
  CHECK(fs::exists(out / "provenance.json"));

  const std::string results = slurp(out / "results.csv");
  const std::string svg = slurp(out / "plot_excess_risk.svg");
  const std::string report = slurp(out / "gamma_report.txt");
  CHECK(run("sweep --config " + cfg.string() + " --out " + out.string() + " --workers 1") == 0);
  CHECK(slurp(out / "results.csv") == results);
  CHECK(slurp(out / "plot_excess_risk.svg") == svg);
  CHECK(slurp(out / "gamma_report.txt") == report);

  // fit and report consume the results file.
  CHECK(run("fit --out " + out.string() + " --set fit.results=" +
            (out / "results.csv").string()) == 0);
  CHECK(fs::exists(out / "fit_report.txt"));
  CHECK(run("report --out " + out.string() + " --set report.results=" +
            (out / "results.csv").string()) == 0);

  fs::remove_all(out);
  fs::remove(cfg);
}

TEST_CASE("check subcommand runs the invariant suite") {
  const fs::path out = "/tmp/weaksup_cli_check";
  fs::remove_all(out);
  CHECK(run("check --out " + out.string() + " --set check.quick=true") == 0);
  CHECK(fs::exists(out / "check_report.txt"));
  const auto ledger = weaksup::read_lines((out / "theory_ledger.csv").string());
  CHECK(ledger.size() > 10);
  CHECK(ledger[0] == "quantity,mode,value,stderr,eta,notes");
  fs::remove_all(out);
}

TEST_CASE("train writes parameters, trajectories, and a ledger") {
  const fs::path out = "/tmp/weaksup_cli_train";
  fs::remove_all(out);
  CHECK(run("train --out " + out.string() +
            " --set problem.builtin=fastrate --set train.n=128 --set train.m=256 "
            "--set train_weak.max_epochs=15 --set train_strong.max_epochs=15") == 0);
  CHECK(fs::exists(out / "g_hat.csv"));
  CHECK(fs::exists(out / "f_hat.csv"));
  CHECK(fs::exists(out / "weak_trajectory.csv"));
  CHECK(fs::exists(out / "strong_trajectory.csv"));
  const auto traj = weaksup::read_lines((out / "strong_trajectory.csv").string());
  CHECK(traj[0] == "epoch,split,risk");
  CHECK(traj.size() > 5);
  CHECK(fs::exists(out / "theory_ledger.csv"));
  fs::remove_all(out);
}

TEST_CASE("runtime failures exit with code 2") {
  CHECK(run("fit --out /tmp/weaksup_cli_fit --set fit.results=/nonexistent/results.csv") == 2);
}
