#include "weaksup/checks.hpp"
#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>

using namespace weaksup;

namespace {

AtomLoss clean_label_loss(const SyntheticProblem& p) {
  return [&p](const TheoryAtom& a) {
    return p.label_law.clean_label(a.x, p.g0(a.x)) == a.y ? 0.0 : 1.0;
  };
}

AtomLoss constant_class_loss(int c) {
  return [c](const TheoryAtom& a) { return a.y == c ? 0.0 : 1.0; };
}

}  // namespace

TEST_CASE("exact_risk on the two-atom problems") {
  const SyntheticProblem clean = fixtures::two_atom_problem(0.0);
  const AtomList atoms0 = distribution_p(clean);
  CHECK(exact_risk(atoms0, clean_label_loss(clean), "01").value == 0.0);
  // Constant classifier against uniform binary labels.
  CHECK(exact_risk(atoms0, constant_class_loss(1), "01").value == 0.5);

  const SyntheticProblem noisy = fixtures::two_atom_problem(0.1);
  const AtomList atoms = distribution_p(noisy);
  const RiskReport bayes = exact_risk(atoms, clean_label_loss(noisy), "01");
  CHECK(bayes.value == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(bayes.mode == EstimateMode::Exact);
  CHECK(bayes.std_error == 0.0);
}

TEST_CASE("excess_risk examples") {
  const SyntheticProblem clean = fixtures::two_atom_problem(0.0);
  const AtomList atoms = distribution_p(clean);
  const AtomLoss bayes = clean_label_loss(clean);
  CHECK(excess_risk(atoms, bayes, bayes, "01").value == 0.0);
  CHECK(excess_risk(atoms, constant_class_loss(0), bayes, "01").value == 0.5);
  // Exact mode evaluates identically on repeat.
  CHECK(excess_risk(atoms, constant_class_loss(0), bayes, "01").value ==
        excess_risk(atoms, constant_class_loss(0), bayes, "01").value);
}

TEST_CASE("monte carlo risks agree with exact risks within 3 standard errors") {
  const SyntheticProblem noisy = fixtures::two_atom_problem(0.1);
  const AtomList atoms = distribution_p(noisy);
  const AtomLoss loss = clean_label_loss(noisy);
  const RiskReport exact = exact_risk(atoms, loss, "01");
  const RiskReport mc = monte_carlo_risk(atoms, loss, 100000, 5, "01");
  CHECK(mc.mode == EstimateMode::MonteCarlo);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - exact.value) <= 3.0 * mc.std_error);
}

TEST_CASE("measure_rate_m: exact weak risks") {
  // k = 5 ladder: atoms at x = 0..4, w = x, uniform mass.
  SyntheticProblem p;
  p.input_dim = 1;
  p.latent_dim = 2;
  FiniteSupport fs;
  fs.atoms.resize(5, 1);
  fs.atoms << 0, 1, 2, 3, 4;
  fs.probs = Vector::Constant(5, 0.2);
  p.support = std::move(fs);
  p.g0.weights = Matrix::Zero(2, 1);
  p.g0.weights(0, 0) = 1.0;
  p.g0.bias = Vector::Zero(2);
  p.g0.bias[1] = 1.0;
  p.g0.nonlin = Nonlin::Identity;
  p.beta0 = Vector::Zero(2);
  p.beta0[0] = 1.0;
  p.weak_classes = 5;
  p.label_law.coeff_x = Vector::Zero(1);
  p.label_law.coeff_z = p.beta0;
  p.label_law.num_classes = 5;
  p.validate();

  // Perfect feature map.
  CHECK(measure_rate_m(p, view_of_problem_g0(p)).value == 0.0);

  // A constant guess is right on exactly one of five classes.
  WeakModelView constant;
  constant.latent = [](const Vector&) {
    Vector z(2);
    z << 0.0, 1.0;
    return z;
  };
  constant.beta = p.beta0;
  CHECK(measure_rate_m(p, constant).value == doctest::Approx(0.8).epsilon(1e-14));

  // Continuous: a feature map offset by 0.3 has weak risk exactly 0.3.
  SyntheticProblem cont = p;
  cont.weak_kind = WeakKind::Continuous;
  WeakModelView offset;
  offset.latent = [&](const Vector& x) {
    Vector z = cont.g0(x);
    z[0] += 0.3;
    return z;
  };
  offset.beta = cont.beta0;
  CHECK(measure_rate_m(cont, offset).value == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("measure_rate_n: hand-set two-atom losses") {
  AtomList q(2);
  q[0].prob = 0.5;
  q[1].prob = 0.5;
  q[0].y = 0;
  q[1].y = 1;
  const AtomLoss f_hat = [](const TheoryAtom& a) { return a.y == 0 ? 1.0 : 0.5; };
  const AtomLoss f_star = [](const TheoryAtom& a) { return a.y == 0 ? 0.2 : 0.3; };
  CHECK(measure_rate_n(q, f_hat, f_star).value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(measure_rate_n(q, f_star, f_star).value == 0.0);
}

TEST_CASE("central condition: comparator-only probe gives exactly zero") {
  AtomList q(2);
  q[0].prob = 0.5;
  q[1].prob = 0.5;
  const AtomLoss f_star = [](const TheoryAtom&) { return 0.7; };
  const auto est = central_condition_eps({f_star}, f_star, q, 1.0, "star");
  CHECK(est.epsilon_hat == 0.0);
  CHECK(est.mode == EstimateMode::Exact);
}

TEST_CASE("central condition: frozen two-atom value") {
  // One probe with loss differences (+1, -0.5) on equal-mass atoms, eta = 1:
  // eps = log(0.5 e^{-1} + 0.5 e^{0.5}).
  AtomList q(2);
  q[0].prob = 0.5;
  q[0].y = 0;
  q[1].prob = 0.5;
  q[1].y = 1;
  const AtomLoss f_star = [](const TheoryAtom&) { return 1.0; };
  const AtomLoss probe = [](const TheoryAtom& a) { return a.y == 0 ? 2.0 : 0.5; };
  const auto est = central_condition_eps({probe}, f_star, q, 1.0, "star");
  CHECK(est.epsilon_hat == doctest::Approx(0.00826609742280713).epsilon(1e-12));
  CHECK(est.family_sample_size == 2);
}

TEST_CASE("central condition: nonnegative and monotone in the probe set") {
  const auto fixtures_list = fixtures::make_audit_fixtures();
  const auto& fx = fixtures_list[0];
  const AtomList q = distribution_p(fx.problem);
  const auto probes = fx.all_probe_losses();
  double previous = -1.0;
  for (std::size_t count = 1; count <= probes.size(); ++count) {
    std::vector<AtomLoss> subset(probes.begin(), probes.begin() + count);
    const auto est = central_condition_eps(subset, fx.star_loss(), q, 1.0, "star");
    CHECK(est.epsilon_hat >= 0.0);
    CHECK(est.epsilon_hat >= previous);
    previous = est.epsilon_hat;
  }
}

TEST_CASE("epsilon is unchanged when g_hat equals g0") {
  const auto res = checks::epsilon_identity();
  INFO(res.details);
  CHECK(res.pass);
}

TEST_CASE("central-condition transfer bounds hold on all audit fixtures") {
  const auto res = checks::central_condition_transfer();
  INFO(res.details);
  CHECK(res.pass);
}

TEST_CASE("relative Lipschitz estimate") {
  const SyntheticProblem cont = [] {
    SyntheticProblem p;
    p.input_dim = 1;
    p.latent_dim = 1;
    FiniteSupport fs;
    fs.atoms.resize(3, 1);
    fs.atoms << -1.0, 0.0, 1.0;
    fs.probs = Vector::Constant(3, 1.0 / 3.0);
    p.support = std::move(fs);
    p.g0.weights = Matrix::Constant(1, 1, 1.0);
    p.g0.bias = Vector::Zero(1);
    p.g0.nonlin = Nonlin::Identity;
    p.beta0 = Vector::Ones(1);
    p.weak_kind = WeakKind::Continuous;
    p.label_law.coeff_x = Vector::Zero(1);
    p.label_law.coeff_z = Vector::Ones(1);
    p.label_law.offset = 1.0;
    p.label_law.num_classes = 2;
    p.validate();
    return p;
  }();

  WeakModelView g0_view = view_of_problem_g0(cont);
  WeakModelView shifted;
  shifted.latent = [&cont](const Vector& x) { return Vector(cont.g0(x).array() + 0.5); };
  shifted.beta = cont.beta0;
  std::vector<std::pair<WeakModelView, WeakModelView>> pairs{{g0_view, shifted}};
  std::vector<EvalPoint> points{{Vector::Constant(1, -1.0), 0}, {Vector::Constant(1, 1.0), 1}};

  // A predictor that ignores z has zero relative variation.
  const auto ignores_z = [](const Vector& x, const Vector&, int y) {
    return (x[0] - y) * (x[0] - y);
  };
  CHECK(relative_lipschitz_estimate(cont, ignores_z, pairs, points) == 0.0);

  // f(x, z) = z with squared loss: |l(z') - l(z)| / |z' - z| = |z + z' - 2y|.
  const auto reads_z = [](const Vector&, const Vector& z, int y) {
    return (z[0] - y) * (z[0] - y);
  };
  double hand = 0.0;
  for (const auto& pt : points) {
    const double z = g0_view.latent(pt.x)[0];
    const double zs = shifted.latent(pt.x)[0];
    hand = std::max(hand, std::abs(z + zs - 2.0 * pt.y));
  }
  const double est = relative_lipschitz_estimate(cont, reads_z, pairs, points);
  CHECK(est == doctest::Approx(hand).epsilon(1e-14));

  // Duplicating the pair list changes nothing.
  std::vector<std::pair<WeakModelView, WeakModelView>> doubled{pairs[0], pairs[0]};
  CHECK(relative_lipschitz_estimate(cont, reads_z, doubled, points) == est);

  // All-zero weak distances leave no informative pairs.
  std::vector<std::pair<WeakModelView, WeakModelView>> degenerate{{g0_view, g0_view}};
  CHECK_THROWS(relative_lipschitz_estimate(cont, reads_z, degenerate, points));
}

TEST_CASE("cramer-chernoff bound values") {
  // Constant 0.1: Lambda(1) = -0.1 exactly, so the bound is e^{-1}.
  CHECK(cramer_chernoff_bound(logmgf_constant(0.1), 1.0, 10, 0.0) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-12));
  // Large t saturates at 1.
  CHECK(cramer_chernoff_bound(logmgf_constant(0.1), 1.0, 10, 100.0) == 1.0);
  // Two-point {0,1} equiprobable, eta = 1, n = 5, t = 0.2:
  // exp(1 + 5 log(0.5 + 0.5 e^{-1})).
  CHECK(cramer_chernoff_bound(logmgf_two_point(0.0, 1.0, 0.5), 1.0, 5, 0.2) ==
        doctest::Approx(0.40680250166461407).epsilon(1e-12));
}

TEST_CASE("log-mgf helpers match sample-based estimates") {
  Rng rng(77);
  Vector samples(200000);
  for (Index i = 0; i < samples.size(); ++i) samples[i] = rng.uniform(-0.5, 1.0);
  const auto exact = logmgf_uniform(-0.5, 1.0);
  const auto sampled = logmgf_from_samples(samples);
  for (const double eta : {0.5, 1.0, 2.0}) {
    CHECK(std::abs(exact(eta) - sampled(eta)) < 0.01);
  }
}

TEST_CASE("empirical tails respect the bound across the grid") {
  const auto res = checks::chernoff_validity(20000);
  INFO(res.details);
  CHECK(res.pass);
}

TEST_CASE("decomposition_check arithmetic and flags") {
  const auto zero = decomposition_check(0.0, 0.0, 0.0, 1.0, true, true);
  CHECK(zero.slack == 0.0);
  CHECK_FALSE(zero.violation);

  const auto flagged = decomposition_check(5.0, 1.0, 1.0, 1.0, true, true);
  CHECK(flagged.slack == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(flagged.violation);

  // With sampled (non-certified) L the same numbers are informational only.
  const auto informational = decomposition_check(5.0, 1.0, 1.0, 1.0, true, false);
  CHECK(informational.informational);
  CHECK_FALSE(informational.violation);
}

TEST_CASE("decomposition audit holds on all fixtures") {
  const auto res = checks::decomposition_audit();
  INFO(res.details);
  CHECK(res.pass);
}

TEST_CASE("run ledger rows append with the declared schema") {
  const std::string path = "/tmp/weaksup_test_ledger.csv";
  std::remove(path.c_str());
  {
    RunLedger ledger(path);
    RiskReport r;
    r.value = 0.25;
    r.mode = EstimateMode::Exact;
    ledger.append("rate_m", r, 1.0, "fixture");
  }
  const auto lines = read_lines(path);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "quantity,mode,value,stderr,eta,notes");
  CHECK(lines[1] == "rate_m,exact,0.25,0,1,fixture");
  std::remove(path.c_str());
}
