#include "weaksup/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace weaksup {
namespace fixtures {

namespace {

// Code-channel latent spec: r sign channels plus one constant channel, with
// head weights (0.5, 1, 2, ...) + bias weight so that beta0.g0(x) is exactly
// the binary code of the sign pattern, an integer in [0, 2^r).
struct CodeSpec {
  Matrix weights;
  Vector bias;
  Vector beta0;
  int classes;
};

CodeSpec make_code_spec(int input_dim, int r_channels, std::uint64_t seed) {
  CodeSpec spec;
  const int s = r_channels + 1;
  spec.weights = Matrix::Zero(s, input_dim);
  spec.bias = Vector::Zero(s);
  Rng rng(derive_seed(seed, "code_spec"));
  for (int i = 0; i < r_channels; ++i) {
    Vector row = rng.normal_vector(input_dim);
    row /= row.norm();
    spec.weights.row(i) = row.transpose();
    spec.bias[i] = rng.uniform(-0.25, 0.25);
  }
  spec.bias[r_channels] = 1.0;  // sign(1) = +1, a constant channel
  spec.beta0 = Vector::Zero(s);
  double half_sum = 0.0;
  for (int i = 0; i < r_channels; ++i) {
    spec.beta0[i] = std::pow(2.0, i) * 0.5;
    half_sum += spec.beta0[i];
  }
  spec.beta0[r_channels] = half_sum;
  spec.classes = 1 << r_channels;
  return spec;
}

// Atoms kept clear of every code hyperplane by its margin. Mixed margin
// scales stage the difficulty: coarse planes are learnable from few
// examples, fine ones need many.
Matrix margin_atoms(const CodeSpec& spec, Index n_atoms, Index input_dim,
                    const std::vector<double>& margins, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "margin_atoms"));
  Matrix atoms(n_atoms, input_dim);
  Index filled = 0;
  long guard = 0;
  while (filled < n_atoms) {
    if (++guard > 1000L * n_atoms) throw Error("margin_atoms: rejection sampling stalled");
    const Vector x = rng.uniform_vector(input_dim, -1.0, 1.0);
    bool keep = true;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double gap =
          std::abs(spec.weights.row(static_cast<Index>(i)).dot(x) + spec.bias[static_cast<Index>(i)]);
      if (gap < margins[i]) {
        keep = false;
        break;
      }
    }
    if (keep) atoms.row(filled++) = x.transpose();
  }
  return atoms;
}

SyntheticProblem make_code_problem(int input_dim, int r_channels, Index n_atoms,
                                   std::uint64_t seed, const std::vector<int>& relabel,
                                   int num_classes, double p_flip,
                                   const std::vector<double>& margins = {}) {
  const CodeSpec spec = make_code_spec(input_dim, r_channels, seed);
  SyntheticProblem p;
  p.input_dim = input_dim;
  p.latent_dim = r_channels + 1;
  FiniteSupport fs;
  if (margins.empty()) {
    fs.atoms = sample_support_atoms(n_atoms, input_dim, SampleLaw::UniformCube, 1.0,
                                    derive_seed(seed, "atoms"));
  } else {
    fs.atoms = margin_atoms(spec, n_atoms, input_dim, margins, derive_seed(seed, "atoms"));
  }
  fs.probs = Vector::Constant(n_atoms, 1.0 / static_cast<double>(n_atoms));
  p.support = std::move(fs);
  p.g0.weights = spec.weights;
  p.g0.bias = spec.bias;
  p.g0.nonlin = Nonlin::Sign;
  p.beta0 = spec.beta0;
  p.weak_kind = WeakKind::Categorical;
  p.weak_classes = spec.classes;
  p.label_law.coeff_x = Vector::Zero(input_dim);
  p.label_law.coeff_z = spec.beta0;
  p.label_law.offset = 0.0;
  p.label_law.relabel = relabel;
  p.label_law.num_classes = num_classes;
  p.label_law.p_flip = p_flip;
  p.validate();
  return p;
}

}  // namespace

SyntheticProblem two_atom_problem(double p_flip) {
  SyntheticProblem p;
  p.input_dim = 1;
  p.latent_dim = 2;
  FiniteSupport fs;
  fs.atoms.resize(2, 1);
  fs.atoms << -1.0, 1.0;
  fs.probs.resize(2);
  fs.probs << 0.5, 0.5;
  p.support = std::move(fs);
  p.g0.weights = Matrix::Zero(2, 1);
  p.g0.weights(0, 0) = 1.0;
  p.g0.bias = Vector::Zero(2);
  p.g0.bias[1] = 1.0;
  p.g0.nonlin = Nonlin::Sign;
  p.beta0 = Vector::Constant(2, 0.5);  // w = (sign(x) + 1) / 2 in {0, 1}
  p.weak_kind = WeakKind::Categorical;
  p.weak_classes = 2;
  p.label_law.coeff_x = Vector::Zero(1);
  p.label_law.coeff_z = p.beta0;
  p.label_law.num_classes = 2;
  p.label_law.p_flip = p_flip;
  p.validate();
  return p;
}

SyntheticProblem default_categorical() {
  // 3 sign channels -> 8 weak classes, strong label = weak class plus flips.
  // Margins shrink per channel so the planes are resolved coarse to fine as
  // data grows.
  return make_code_problem(10, 3, 3000, 2024, {}, 8, 0.05, {0.25, 0.08, 0.02});
}

SyntheticProblem fastrate_separable() {
  SyntheticProblem p = make_code_problem(6, 1, 2048, 77, {}, 2, 0.0, {0.015});
  return p;
}

SyntheticProblem problem_by_name(const std::string& name) {
  if (name == "default_cat") return default_categorical();
  if (name == "fastrate") return fastrate_separable();
  if (name == "two_atom") return two_atom_problem(0.1);
  throw ConfigError("unknown builtin problem: " + name);
}

PredictorFamily default_weak_family(const SyntheticProblem& problem) {
  return PredictorFamily::weak_map(problem.input_dim, problem.latent_dim, Arch::OneHidden, 32,
                                   60.0, problem.weak_kind, problem.weak_classes,
                                   problem.weak_norm);
}

PredictorFamily default_strong_family(const SyntheticProblem& problem) {
  // Widest one-hidden-layer width keeping the parameter count at most 200.
  const int din = problem.input_dim + problem.latent_dim;
  const int k = problem.label_law.num_classes;
  const int width = std::clamp((200 - k) / (din + 1 + k), 2, 16);
  return PredictorFamily::strong_predictor(problem.input_dim, problem.latent_dim, k,
                                           Arch::OneHidden, width, 12.0,
                                           StrongLoss::CrossEntropyClipped, 10.0);
}

TrainConfig default_weak_train() {
  TrainConfig cfg;
  cfg.step_size = 0.05;
  cfg.decay = 0.97;
  cfg.batch_size = 32;
  cfg.max_epochs = 4000;  // cap; the sweep scales epochs as budget / m
  cfg.early_stop_every = 5;
  cfg.holdout_fraction = 0.0;  // weak models train to convergence
  return cfg;
}

TrainConfig default_strong_train() {
  TrainConfig cfg;
  cfg.step_size = 0.05;
  cfg.decay = 0.97;
  cfg.batch_size = 32;
  cfg.max_epochs = 150;
  cfg.early_stop_every = 5;
  cfg.holdout_fraction = 0.2;
  return cfg;
}

SweepPlan default_sweep_plan(const std::string& problem_name, std::uint64_t global_seed) {
  SweepPlan plan;
  plan.problem = problem_by_name(problem_name);
  plan.weak_family = default_weak_family(plan.problem);
  plan.strong_family = default_strong_family(plan.problem);
  plan.weak_train = default_weak_train();
  plan.strong_train = default_strong_train();
  plan.n_grid = {64, 128, 256, 512, 1024, 2048, 4096};
  double c1 = 4.0;
  if (problem_name == "fastrate") {
    plan.strong_family = PredictorFamily::strong_predictor(
        plan.problem.input_dim, plan.problem.latent_dim, plan.problem.label_law.num_classes,
        Arch::Linear, 0, 10.0, StrongLoss::SquaredClipped, 10.0);
    // Squared loss on raw latent features needs a smaller stable step, and
    // lighter schedules keep the weak error visible at small n. The problem
    // is realizable, so train to the epoch budget instead of a holdout stop.
    plan.strong_train.step_size = 0.01;
    plan.strong_train.max_epochs = 400;
    plan.strong_train.holdout_fraction = 0.0;
    c1 = 1.0;
  }
  const double c2 = c1 / static_cast<double>(plan.n_grid.front());  // m(n_min) matches
  plan.schedules = {{Growth::Zero, 0.0}, {Growth::Linear, c1}, {Growth::Quadratic, c2}};
  plan.seeds = {1, 2, 3, 4};
  plan.global_seed = global_seed;
  plan.weak_visit_budget = 600000;
  plan.weak_min_epochs = 1;
  return plan;
}

// --- audit fixtures ---------------------------------------------------------

AtomLoss AuditFixture::probe_loss(std::size_t i) const {
  return strong_model_loss(strong_family, probe_params.at(i));
}

std::vector<AtomLoss> AuditFixture::all_probe_losses() const {
  std::vector<AtomLoss> out;
  for (std::size_t i = 0; i < probe_params.size(); ++i) out.push_back(probe_loss(i));
  return out;
}

double AuditFixture::strong_loss_at(const Vector& x, const Vector& z, int y) const {
  return loss_strong(strong_family, probe_params[0], x, z, y);
}

namespace {

// Shared storage for atom-table feature maps.
struct AtomTable {
  Matrix atoms;    // n x input_dim
  Matrix latents;  // n x latent_dim
};

WeakModelView table_view(std::shared_ptr<const AtomTable> table, Vector beta) {
  WeakModelView v;
  v.latent = [table](const Vector& x) -> Vector {
    for (Index i = 0; i < table->atoms.rows(); ++i) {
      if ((table->atoms.row(i).transpose() - x).norm() == 0.0) {
        return table->latents.row(i).transpose();
      }
    }
    throw Error("fixture feature map evaluated off the atom support");
  };
  v.beta = std::move(beta);
  return v;
}

// g_hat equal to g0 except on a seeded subset of atoms, where the code
// channels are negated. A negated code always bins to the complement class,
// so the disagreement event and the corrupted-atom set coincide exactly.
WeakModelView corrupted_code_view(const SyntheticProblem& problem, double corrupt_fraction,
                                  std::uint64_t seed) {
  const FiniteSupport& fs = problem.finite_support();
  auto table = std::make_shared<AtomTable>();
  table->atoms = fs.atoms;
  table->latents = problem.g0.apply_rows(fs.atoms);
  const Index n = fs.atoms.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, "corrupt_atoms"));
  rng.shuffle(order);
  const Index corrupt = static_cast<Index>(corrupt_fraction * static_cast<double>(n));
  const int code_channels = problem.latent_dim - 1;
  for (Index j = 0; j < corrupt; ++j) {
    const Index row = order[static_cast<std::size_t>(j)];
    for (int c = 0; c < code_channels; ++c) table->latents(row, c) *= -1.0;
  }
  return table_view(std::move(table), problem.beta0);
}

// Continuous-case g_hat: per-atom additive offsets on the scalar latent.
WeakModelView offset_view(const SyntheticProblem& problem, double amplitude,
                          std::uint64_t seed) {
  const FiniteSupport& fs = problem.finite_support();
  auto table = std::make_shared<AtomTable>();
  table->atoms = fs.atoms;
  table->latents = problem.g0.apply_rows(fs.atoms);
  Rng rng(derive_seed(seed, "offsets"));
  for (Index i = 0; i < table->latents.rows(); ++i) {
    table->latents(i, 0) += rng.uniform(-amplitude, amplitude);
  }
  return table_view(std::move(table), problem.beta0);
}

ParamVector perturbed(const PredictorFamily& family, const ParamVector& base, double scale,
                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, "probe"));
  ParamVector out = base;
  out.values += scale * rng.normal_vector(base.values.size());
  return project_l2(std::move(out), family.radius);
}

AuditFixture make_categorical_fixture(const std::string& name, int r_channels, Index n_atoms,
                                      double p_flip, const std::vector<int>& relabel,
                                      int num_classes, const std::vector<double>& corrupt_rates,
                                      std::uint64_t seed) {
  AuditFixture fx;
  fx.name = name;
  fx.problem = make_code_problem(3, r_channels, n_atoms, seed, relabel, num_classes, p_flip);
  fx.strong_family = PredictorFamily::strong_predictor(
      fx.problem.input_dim, fx.problem.latent_dim, num_classes, Arch::Linear, 0, 25.0,
      StrongLoss::CrossEntropyClipped, 6.0);

  // Comparator: scores_c = c u - c^2/2 with u = beta0.z, the linear form of
  // rounding u to the class grid. Imperfect on relabeled fixtures, which is
  // fine: the audits hold for any comparator shared by both estimates.
  const int din = fx.strong_family.feature_dim();
  Matrix a = Matrix::Zero(num_classes, din);
  Vector bias = Vector::Zero(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    const double jc = static_cast<double>(c);
    for (Index j = 0; j < fx.problem.latent_dim; ++j) {
      a(c, fx.problem.input_dim + j) = jc * fx.problem.beta0[j];
    }
    bias[c] = -0.5 * jc * jc;
  }
  ParamVector star{Vector::Zero(fx.strong_family.param_count()), fx.strong_family.family_id};
  Index at = 0;
  for (Index col = 0; col < din; ++col) {
    for (int row = 0; row < num_classes; ++row) star.values[at++] = a(row, col);
  }
  for (int row = 0; row < num_classes; ++row) star.values[at++] = bias[row];
  star = project_l2(std::move(star), fx.strong_family.radius);

  fx.probe_params.push_back(star);
  fx.probe_params.push_back(perturbed(fx.strong_family, star, 0.4, mix_seed(seed, 1)));
  fx.probe_params.push_back(perturbed(fx.strong_family, star, 1.2, mix_seed(seed, 2)));
  ParamVector zero{Vector::Zero(fx.strong_family.param_count()), fx.strong_family.family_id};
  fx.probe_params.push_back(perturbed(fx.strong_family, zero, 0.8, mix_seed(seed, 3)));

  for (std::size_t i = 0; i < corrupt_rates.size(); ++i) {
    fx.g_hats.push_back(
        corrupted_code_view(fx.problem, corrupt_rates[i], mix_seed(seed, 100 + i)));
  }
  // For the 0/1 weak metric any bounded loss is B-relative-Lipschitz.
  fx.analytic_l = fx.strong_family.loss_bound;
  return fx;
}

SyntheticProblem make_continuous_problem(Index n_atoms, std::uint64_t seed, double p_flip) {
  SyntheticProblem p;
  p.input_dim = 2;
  p.latent_dim = 1;
  FiniteSupport fs;
  fs.atoms =
      sample_support_atoms(n_atoms, 2, SampleLaw::UniformCube, 1.0, derive_seed(seed, "atoms"));
  fs.probs = Vector::Constant(n_atoms, 1.0 / static_cast<double>(n_atoms));
  p.support = std::move(fs);
  p.g0.weights = Matrix::Zero(1, 2);
  p.g0.weights << 0.8, -0.6;
  p.g0.bias = Vector::Constant(1, 1.5);  // z in [0.1, 2.9] over the cube
  p.g0.nonlin = Nonlin::Identity;
  p.beta0 = Vector::Ones(1);
  p.weak_kind = WeakKind::Continuous;
  p.weak_norm = WeakNorm::L2;
  p.label_law.coeff_x = Vector::Zero(2);
  p.label_law.coeff_z = Vector::Ones(1);
  p.label_law.num_classes = 4;
  p.label_law.p_flip = p_flip;
  p.validate();
  return p;
}

// Exact Lipschitz constant of the clipped squared loss in the scalar latent,
// over the hull of realized latent values. The raw loss is quadratic in z,
// so |dl/dz| is maximized at hull endpoints; clipping only shrinks changes.
double continuous_analytic_l(const AuditFixture& fx) {
  const AtomList p_atoms = distribution_p(fx.problem);
  double best = 0.0;
  for (const auto& params : fx.probe_params) {
    // Linear strong family: scores = A [x; z] + c, z is the last column.
    const int k = fx.strong_family.num_classes;
    const int din = fx.strong_family.feature_dim();
    Matrix a(k, din);
    Index at = 0;
    for (Index col = 0; col < din; ++col) {
      for (int row = 0; row < k; ++row) a(row, col) = params.values[at++];
    }
    Vector bias = params.values.segment(at, k);
    for (const auto& atom : p_atoms) {
      double z_lo = atom.z[0], z_hi = atom.z[0];
      for (const auto& g : fx.g_hats) {
        const double zg = g.latent(atom.x)[0];
        z_lo = std::min(z_lo, zg);
        z_hi = std::max(z_hi, zg);
      }
      for (const double z : {z_lo, z_hi}) {
        Vector in(din);
        in.head(fx.problem.input_dim) = atom.x;
        in[din - 1] = z;
        Vector scores = a * in + bias;
        scores[atom.y] -= 1.0;
        const double dldz = 2.0 * scores.dot(a.col(din - 1));
        best = std::max(best, std::abs(dldz));
      }
    }
  }
  return best;
}

AuditFixture make_continuous_fixture(const std::string& name, Index n_atoms, double p_flip,
                                     const std::vector<double>& amplitudes,
                                     std::uint64_t seed) {
  AuditFixture fx;
  fx.name = name;
  fx.problem = make_continuous_problem(n_atoms, seed, p_flip);
  fx.strong_family = PredictorFamily::strong_predictor(
      fx.problem.input_dim, fx.problem.latent_dim, fx.problem.label_law.num_classes, Arch::Linear,
      0, 25.0, StrongLoss::SquaredClipped, 8.0);

  Rng rng(derive_seed(seed, "cont_star"));
  ParamVector star{0.3 * rng.normal_vector(fx.strong_family.param_count()),
                   fx.strong_family.family_id};
  star = project_l2(std::move(star), fx.strong_family.radius);
  fx.probe_params.push_back(star);
  fx.probe_params.push_back(perturbed(fx.strong_family, star, 0.3, mix_seed(seed, 1)));
  fx.probe_params.push_back(perturbed(fx.strong_family, star, 0.9, mix_seed(seed, 2)));

  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    fx.g_hats.push_back(offset_view(fx.problem, amplitudes[i], mix_seed(seed, 200 + i)));
  }
  fx.analytic_l = continuous_analytic_l(fx);
  return fx;
}

}  // namespace

std::vector<AuditFixture> make_audit_fixtures() {
  std::vector<AuditFixture> out;
  out.push_back(
      make_categorical_fixture("cat_k4_base", 2, 40, 0.0, {}, 4, {0.25, 0.1}, 9001));
  out.push_back(make_categorical_fixture("cat_k8_folded", 3, 56, 0.05, {0, 1, 2, 3, 3, 2, 1, 0},
                                         4, {0.1, 0.02}, 9002));
  out.push_back(
      make_categorical_fixture("cat_k4_binary", 2, 32, 0.10, {0, 1, 1, 0}, 2, {0.3}, 9003));
  out.push_back(make_continuous_fixture("cont_wide", 30, 0.0, {0.4, 0.1}, 9004));
  out.push_back(make_continuous_fixture("cont_tight", 44, 0.05, {0.06}, 9005));
  return out;
}

}  // namespace fixtures
}  // namespace weaksup
