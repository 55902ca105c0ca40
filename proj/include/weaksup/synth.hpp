#pragma once

#include "weaksup/config.hpp"
#include "weaksup/rng.hpp"
#include "weaksup/types.hpp"

#include <functional>
#include <memory>
#include <set>
#include <optional>
#include <variant>
#include <vector>

namespace weaksup {

enum class Nonlin { Identity, Clamp, Sign };

// Ground-truth latent map: z = nonlin(W x + b), applied elementwise.
// Clamp limits to [-1, 1]; Sign maps to {-1, +1} with sign(0) = +1.
struct AffineMap {
  Matrix weights;  // latent_dim x input_dim
  Vector bias;     // latent_dim
  Nonlin nonlin = Nonlin::Identity;

  Vector operator()(const Vector& x) const;
  // Rows are samples.
  Matrix apply_rows(const Matrix& x_rows) const;
};

enum class WeakKind { Categorical, Continuous };
enum class WeakNorm { L1, L2 };

// Deterministic label map plus optional flip noise. The clean label is
// relabel[bin] where bin = clamp(round(coeff_x.x + coeff_z.z + offset)) and
// relabel maps bin indices onto {0..num_classes-1}. With probability p_flip
// the label is replaced by a uniform draw over the other classes.
struct LabelLaw {
  Vector coeff_x;
  Vector coeff_z;
  double offset = 0.0;
  std::vector<int> relabel;  // size = bin count; identity when empty
  int num_classes = 2;
  double p_flip = 0.0;

  int bin_count() const;
  int bin_of(const Vector& x, const Vector& z) const;
  int clean_label(const Vector& x, const Vector& z) const;
  int sample_label(const Vector& x, const Vector& z, Rng& rng) const;
  void validate(Index input_dim, Index latent_dim) const;
};

struct FiniteSupport {
  Matrix atoms;  // n_atoms x input_dim
  Vector probs;  // n_atoms, nonnegative, sums to 1
};

enum class SampleLaw { UniformCube, Gaussian };

struct GenerativeSupport {
  SampleLaw law = SampleLaw::UniformCube;
  double scale = 1.0;
};

// A weakly supervised problem with fully known ground truth: latent map g0,
// weak head beta0 with W = beta0.g0(X), and an explicit label law for Y.
struct SyntheticProblem {
  int input_dim = 0;
  int latent_dim = 0;
  std::variant<FiniteSupport, GenerativeSupport> support;
  AffineMap g0;
  Vector beta0;
  WeakKind weak_kind = WeakKind::Categorical;
  int weak_classes = 2;                // categorical only
  WeakNorm weak_norm = WeakNorm::L2;   // continuous only
  double weak_noise_halfwidth = 0.0;   // continuous only; additive uniform noise
  LabelLaw label_law;

  bool finite() const { return std::holds_alternative<FiniteSupport>(support); }
  const FiniteSupport& finite_support() const;

  // beta0 . g0(x): the exact weak label (continuous) or its class value.
  double weak_score(const Vector& x) const;
  Vector weak_scores(const Matrix& x_rows) const;
  int weak_class_of_score(double score) const;

  void validate() const;
};

// Simulated weak labeler; the handle is trained elsewhere and frozen here.
struct Annotator {
  std::function<double(const Vector&)> label_fn;
  double target_accuracy = 0.0;
};

struct WeakCorruption {
  enum class Kind { None, UniformNoise, Annotator, Coarse };

  Kind kind = Kind::None;
  double keep_prob = 1.0;  // UniformNoise
  int classes = 0;         // UniformNoise
  int modulus = 0;         // Coarse
  std::shared_ptr<const Annotator> annotator;

  static WeakCorruption none() { return {}; }
  static WeakCorruption uniform_noise(double keep_prob, int classes);
  static WeakCorruption coarse(int modulus);
  static WeakCorruption from_annotator(std::shared_ptr<const Annotator> handle);
};

enum class DatasetKind { WeakPairs, StrongPairs, Augmented };

struct Dataset {
  DatasetKind kind = DatasetKind::StrongPairs;
  Matrix x;       // rows x input_dim
  Matrix z;       // rows x latent_dim (Augmented only, otherwise 0 cols)
  Vector labels;  // w for weak pairs, y (integral) otherwise
  std::uint64_t seed = 0;

  Index rows() const { return x.rows(); }
};

// --- sampling operations -------------------------------------------------

// Opt-in guard against accidental seed reuse across sampling calls.
class SeedRegistry {
 public:
  // Throws if the seed was claimed before.
  void claim(std::uint64_t seed);

 private:
  std::set<std::uint64_t> used_;
};

Dataset sample_strong(const SyntheticProblem& problem, Index n, std::uint64_t seed,
                      SeedRegistry* registry = nullptr);
Dataset sample_weak(const SyntheticProblem& problem, Index m, std::uint64_t seed,
                    const WeakCorruption& corruption, SeedRegistry* registry = nullptr);

int apply_coarse(int y, int modulus);
int apply_uniform_noise(int y, double keep_prob, int classes, Rng& rng);

// One atom of the full joint law over (x, z, w, y).
struct SupportAtom {
  Vector x;
  Vector z;
  double w = 0.0;
  int y = 0;
  double prob = 0.0;
};

// Exhaustive enumeration of the joint support; requires a finite problem.
// Zero-probability atoms are dropped.
std::vector<SupportAtom> enumerate_support(const SyntheticProblem& problem);

// Seeded atom generator backing the `finite_sampled` support kind.
Matrix sample_support_atoms(Index count, Index dim, SampleLaw law, double scale,
                            std::uint64_t seed);

// --- serialization -------------------------------------------------------

void write_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

Config problem_to_config(const SyntheticProblem& problem);
SyntheticProblem problem_from_config(const Config& cfg);

}  // namespace weaksup
