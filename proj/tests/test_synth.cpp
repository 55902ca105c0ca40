#include "weaksup/fixtures.hpp"
#include "weaksup/io.hpp"
#include "weaksup/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

using namespace weaksup;

namespace {

// Atoms at x = 0..k-1 with w = x; the simplest k-class categorical problem.
SyntheticProblem ladder_problem(int k, double p_flip = 0.0) {
  SyntheticProblem p;
  p.input_dim = 1;
  p.latent_dim = 2;
  FiniteSupport fs;
  fs.atoms.resize(k, 1);
  for (int i = 0; i < k; ++i) fs.atoms(i, 0) = static_cast<double>(i);
  fs.probs = Vector::Constant(k, 1.0 / k);
  p.support = std::move(fs);
  p.g0.weights = Matrix::Zero(2, 1);
  p.g0.weights(0, 0) = 1.0;
  p.g0.bias = Vector::Zero(2);
  p.g0.bias[1] = 1.0;
  p.g0.nonlin = Nonlin::Identity;
  p.beta0 = Vector::Zero(2);
  p.beta0[0] = 1.0;
  p.weak_kind = WeakKind::Categorical;
  p.weak_classes = k;
  p.label_law.coeff_x = Vector::Zero(1);
  p.label_law.coeff_z = p.beta0;
  p.label_law.num_classes = k;
  p.label_law.p_flip = p_flip;
  p.validate();
  return p;
}

SyntheticProblem continuous_line_problem() {
  SyntheticProblem p;
  p.input_dim = 1;
  p.latent_dim = 1;
  FiniteSupport fs;
  fs.atoms.resize(4, 1);
  fs.atoms << -1.0, -0.25, 0.25, 1.0;
  fs.probs = Vector::Constant(4, 0.25);
  p.support = std::move(fs);
  p.g0.weights = Matrix::Constant(1, 1, 2.0);
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
}

}  // namespace

TEST_CASE("apply_coarse folds labels modulo d") {
  CHECK(apply_coarse(7, 5) == 2);
  CHECK(apply_coarse(3, 10) == 3);
  CHECK(apply_coarse(9, 2) == 1);
  CHECK_THROWS(apply_coarse(3, 1));
  CHECK_THROWS(apply_coarse(-1, 2));
}

TEST_CASE("apply_uniform_noise keeps or redraws labels") {
  Rng keep_rng(1);
  for (int i = 0; i < 50; ++i) CHECK(apply_uniform_noise(3, 1.0, 10, keep_rng) == 3);

  // keep_prob = 0, k = 2: the re-draw includes the original label.
  Rng rng(2);
  long agree = 0;
  const long trials = 1000000;
  for (long i = 0; i < trials; ++i) {
    if (apply_uniform_noise(1, 0.0, 2, rng) == 1) ++agree;
  }
  CHECK(std::abs(static_cast<double>(agree) / trials - 0.5) < 0.005);

  Rng rng2(3);
  agree = 0;
  for (long i = 0; i < trials; ++i) {
    if (apply_uniform_noise(4, 0.9, 10, rng2) == 4) ++agree;
  }
  CHECK(std::abs(static_cast<double>(agree) / trials - 0.91) < 0.005);
}

TEST_CASE("sample_strong: determinism, label law, atom frequencies") {
  const SyntheticProblem p = fixtures::two_atom_problem(0.0);
  CHECK_THROWS(sample_strong(p, 0, 1));

  const Dataset a = sample_strong(p, 200, 7);
  const Dataset b = sample_strong(p, 200, 7);
  CHECK(a.x == b.x);
  CHECK(a.labels == b.labels);

  // Deterministic labels match the label law exactly.
  for (Index i = 0; i < a.rows(); ++i) {
    const Vector x = a.x.row(i).transpose();
    CHECK(static_cast<int>(a.labels[i]) == p.label_law.clean_label(x, p.g0(x)));
  }

  // Two equal atoms: empirical frequency within 0.01 of 0.5 at n = 1e5
  // (about 6 binomial standard errors).
  const Dataset big = sample_strong(p, 100000, 1);
  const double frac_pos = static_cast<double>((big.x.array() > 0.0).count()) / 100000.0;
  CHECK(std::abs(frac_pos - 0.5) < 0.01);
}

TEST_CASE("sample_weak: clean labels equal the weak score exactly") {
  const SyntheticProblem cat = ladder_problem(8);
  const Dataset weak = sample_weak(cat, 500, 3, WeakCorruption::none());
  for (Index i = 0; i < weak.rows(); ++i) {
    CHECK(weak.labels[i] == cat.weak_score(weak.x.row(i).transpose()));
  }

  const SyntheticProblem cont = continuous_line_problem();
  const Dataset cw = sample_weak(cont, 100, 3, WeakCorruption::none());
  for (Index i = 0; i < cw.rows(); ++i) {
    CHECK(cw.labels[i] == cont.weak_score(cw.x.row(i).transpose()));
  }
}

TEST_CASE("sample_weak: uniform-noise calibration at one million rows") {
  const SyntheticProblem p = ladder_problem(10);
  const Dataset weak = sample_weak(p, 1000000, 11, WeakCorruption::uniform_noise(0.9, 10));
  long agree = 0;
  for (Index i = 0; i < weak.rows(); ++i) {
    if (weak.labels[i] == p.weak_score(weak.x.row(i).transpose())) ++agree;
  }
  CHECK(std::abs(static_cast<double>(agree) / 1000000.0 - 0.91) < 0.005);
}

TEST_CASE("sample_weak: coarse labels land in {0..d-1}") {
  const SyntheticProblem p = ladder_problem(10);
  const Dataset weak = sample_weak(p, 2000, 5, WeakCorruption::coarse(5));
  std::set<int> seen;
  for (Index i = 0; i < weak.rows(); ++i) {
    const int w = static_cast<int>(weak.labels[i]);
    CHECK(w >= 0);
    CHECK(w <= 4);
    seen.insert(w);
  }
  // Surjective onto {0..d-1} since k >= d and all atoms have mass.
  CHECK(seen.size() == 5);
  // The fold is the plain modulus of the clean class.
  for (Index i = 0; i < weak.rows(); ++i) {
    const int clean = p.weak_class_of_score(p.weak_score(weak.x.row(i).transpose()));
    CHECK(static_cast<int>(weak.labels[i]) == clean % 5);
  }
}

TEST_CASE("sample_weak rejects class corruption on continuous labels") {
  const SyntheticProblem cont = continuous_line_problem();
  CHECK_THROWS(sample_weak(cont, 10, 1, WeakCorruption::coarse(2)));
  CHECK_THROWS(sample_weak(cont, 10, 1, WeakCorruption::uniform_noise(0.9, 2)));
}

TEST_CASE("enumerate_support expands flip noise into per-class atoms") {
  const SyntheticProblem clean = fixtures::two_atom_problem(0.0);
  const auto atoms0 = enumerate_support(clean);
  CHECK(atoms0.size() == 2);
  double total = 0.0;
  for (const auto& a : atoms0) total += a.prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

  const SyntheticProblem noisy = fixtures::two_atom_problem(0.1);
  const auto atoms = enumerate_support(noisy);
  REQUIRE(atoms.size() == 4);
  std::multiset<double> probs;
  for (const auto& a : atoms) probs.insert(a.prob);
  CHECK(probs.count(0.45) == 2);
  CHECK(probs.count(0.05) == 2);
  for (const auto& a : atoms) {
    CHECK(a.z == noisy.g0(a.x));
    CHECK(a.w == noisy.beta0.dot(a.z));
  }
}

TEST_CASE("enumerate_support drops zero-probability atoms") {
  SyntheticProblem p = ladder_problem(3);
  std::get<FiniteSupport>(p.support).probs << 0.5, 0.0, 0.5;
  const auto atoms = enumerate_support(p);
  CHECK(atoms.size() == 2);
  double total = 0.0;
  for (const auto& a : atoms) total += a.prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("enumerate_support rejects generative problems") {
  SyntheticProblem p = ladder_problem(3);
  p.support = GenerativeSupport{SampleLaw::UniformCube, 1.0};
  CHECK_THROWS(enumerate_support(p));
}

TEST_CASE("dataset csv round-trip") {
  const SyntheticProblem p = fixtures::two_atom_problem(0.1);
  const Dataset strong = sample_strong(p, 25, 9);
  const std::string path = "/tmp/weaksup_test_strong.csv";
  write_dataset_csv(strong, path);
  const Dataset back = read_dataset_csv(path);
  CHECK(back.kind == strong.kind);
  CHECK(back.seed == strong.seed);
  CHECK(back.x == strong.x);
  CHECK(back.labels == strong.labels);
  std::remove(path.c_str());
}

TEST_CASE("problem config round-trip preserves the joint law") {
  const SyntheticProblem p = fixtures::default_categorical();
  const SyntheticProblem q = problem_from_config(problem_to_config(p));
  CHECK(q.input_dim == p.input_dim);
  CHECK(q.latent_dim == p.latent_dim);
  CHECK(q.finite_support().atoms == p.finite_support().atoms);
  CHECK(q.beta0 == p.beta0);
  CHECK(q.label_law.p_flip == p.label_law.p_flip);
  const Vector x = p.finite_support().atoms.row(17).transpose();
  CHECK(q.weak_score(x) == p.weak_score(x));
  CHECK(q.label_law.clean_label(x, q.g0(x)) == p.label_law.clean_label(x, p.g0(x)));
}

TEST_CASE("seed registry rejects reuse only when opted in") {
  const SyntheticProblem p = fixtures::two_atom_problem(0.0);
  // Off by default: reuse is fine.
  CHECK_NOTHROW(sample_strong(p, 5, 42));
  CHECK_NOTHROW(sample_strong(p, 5, 42));

  SeedRegistry registry;
  CHECK_NOTHROW(sample_strong(p, 5, 42, &registry));
  CHECK_THROWS(sample_strong(p, 5, 42, &registry));
  CHECK_NOTHROW(sample_weak(p, 5, 43, WeakCorruption::none(), &registry));
  CHECK_THROWS(sample_weak(p, 5, 43, WeakCorruption::none(), &registry));
}

TEST_CASE("generative support samples deterministically in range") {
  SyntheticProblem p = fixtures::fastrate_separable();
  p.support = GenerativeSupport{SampleLaw::UniformCube, 1.0};
  p.validate();
  const Dataset a = sample_strong(p, 300, 4);
  const Dataset b = sample_strong(p, 300, 4);
  CHECK(a.x == b.x);
  CHECK(a.x.cwiseAbs().maxCoeff() <= 1.0);
  // Sign-code weak scores stay exact classes off the finite support too.
  const Dataset w = sample_weak(p, 200, 9, WeakCorruption::none());
  for (Index i = 0; i < w.rows(); ++i) {
    CHECK((w.labels[i] == 0.0 || w.labels[i] == 1.0));
  }
}

TEST_CASE("finite-support invariants are enforced") {
  SyntheticProblem p = ladder_problem(3);
  std::get<FiniteSupport>(p.support).probs << 0.5, 0.2, 0.5;  // sums to 1.2
  CHECK_THROWS(p.validate());

  SyntheticProblem q = ladder_problem(3);
  q.beta0[0] = 0.7;  // weak score no longer an exact class
  CHECK_THROWS(q.validate());
}
