#pragma once

#include "weaksup/sweep.hpp"
#include "weaksup/synth.hpp"
#include "weaksup/theory.hpp"
#include "weaksup/training.hpp"

#include <string>
#include <vector>

namespace weaksup {
namespace fixtures {

// Two atoms at +-1 with a binary label; the workhorse for exact-risk tests.
SyntheticProblem two_atom_problem(double p_flip);

// The default categorical benchmark: sign-code latents over a finite cloud,
// 4-way labels from a palindrome relabeling of the 8 score bins, 5% flips.
SyntheticProblem default_categorical();

// Separable binary problem realizable with zero squared loss; satisfies the
// strong central condition exactly.
SyntheticProblem fastrate_separable();

SyntheticProblem problem_by_name(const std::string& name);

PredictorFamily default_weak_family(const SyntheticProblem& problem);
PredictorFamily default_strong_family(const SyntheticProblem& problem);
TrainConfig default_weak_train();
TrainConfig default_strong_train();

// Full sweep plan for a built-in problem, including schedules and seeds.
SweepPlan default_sweep_plan(const std::string& problem_name, std::uint64_t global_seed);

// A finite problem together with feature maps built by corrupting g0 on a
// subset of atoms, strong probe models, and the constants needed to audit
// the central-condition transfer and the excess-risk decomposition exactly.
struct AuditFixture {
  std::string name;
  SyntheticProblem problem;
  PredictorFamily strong_family;
  std::vector<ParamVector> probe_params;  // probe_params[0] is the comparator
  std::vector<WeakModelView> g_hats;
  double analytic_l = 0.0;  // valid upper bound for the realized pairs

  AtomLoss probe_loss(std::size_t i) const;
  AtomLoss star_loss() const { return probe_loss(0); }
  std::vector<AtomLoss> all_probe_losses() const;
  double strong_loss_at(const Vector& x, const Vector& z, int y) const;
};

// Five fixtures: three categorical, two continuous.
std::vector<AuditFixture> make_audit_fixtures();

}  // namespace fixtures
}  // namespace weaksup
