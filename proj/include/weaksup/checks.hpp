#pragma once

#include <string>
#include <vector>

namespace weaksup {
namespace checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details;
};

// Analytic vs central finite-difference gradients on random
// (family, theta, batch) triples; max relative error must stay below 1e-4.
CheckResult gradient_checks(int count);
// A deliberately corrupted gradient must be flagged by the same comparison.
CheckResult gradient_negative_control();
// Sampled losses never exceed the family bound B.
CheckResult loss_boundedness(long evals_per_family);
// Projected-SGD training risk vs the exhaustive grid oracle on <=4-parameter
// families.
CheckResult oracle_equivalence();
// Propositions 2-3 transfer audits with exact enumeration on the fixtures.
CheckResult central_condition_transfer();
// epsilon(P-hat) equals epsilon(P) exactly when g_hat = g0.
CheckResult epsilon_identity();
// Proposition 1 decomposition audit on the fixtures.
CheckResult decomposition_audit();
// Empirical tails vs the Cramer-Chernoff bound over a (law, n, t, eta) grid.
CheckResult chernoff_validity(long trials);
// Power-law fit recovery: exact on noiseless input, within 0.05 under 1%
// multiplicative noise.
CheckResult powerlaw_recovery();

std::vector<CheckResult> run_all(bool quick);

}  // namespace checks
}  // namespace weaksup
