#include "weaksup/synth.hpp"

#include "weaksup/io.hpp"

#include <algorithm>
#include <cmath>

namespace weaksup {

namespace {

double apply_nonlin(double v, Nonlin nl) {
  switch (nl) {
    case Nonlin::Identity:
      return v;
    case Nonlin::Clamp:
      return std::clamp(v, -1.0, 1.0);
    case Nonlin::Sign:
      return v < 0.0 ? -1.0 : 1.0;
  }
  return v;
}

// Draws an atom index by inverse CDF; cdf must be nondecreasing ending at ~1.
Index draw_index(const Vector& cdf, Rng& rng) {
  const double u = rng.uniform();
  const double* begin = cdf.data();
  const double* end = begin + cdf.size();
  const double* it = std::upper_bound(begin, end, u);
  Index idx = static_cast<Index>(it - begin);
  if (idx >= cdf.size()) idx = cdf.size() - 1;
  return idx;
}

Vector cumulative(const Vector& probs) {
  Vector cdf(probs.size());
  double acc = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  return cdf;
}

Vector sample_input(const GenerativeSupport& gen, Index dim, Rng& rng) {
  if (gen.law == SampleLaw::UniformCube) return rng.uniform_vector(dim, -gen.scale, gen.scale);
  return rng.normal_vector(dim) * gen.scale;
}

}  // namespace

Vector AffineMap::operator()(const Vector& x) const {
  Vector z = weights * x + bias;
  for (Index i = 0; i < z.size(); ++i) z[i] = apply_nonlin(z[i], nonlin);
  return z;
}

Matrix AffineMap::apply_rows(const Matrix& x_rows) const {
  Matrix z = x_rows * weights.transpose();
  z.rowwise() += bias.transpose();
  switch (nonlin) {
    case Nonlin::Identity:
      break;
    case Nonlin::Clamp:
      z = z.cwiseMax(-1.0).cwiseMin(1.0);
      break;
    case Nonlin::Sign:
      z = (z.array() < 0.0).select(Matrix::Constant(z.rows(), z.cols(), -1.0),
                                   Matrix::Constant(z.rows(), z.cols(), 1.0));
      break;
  }
  return z;
}

int LabelLaw::bin_count() const {
  return relabel.empty() ? num_classes : static_cast<int>(relabel.size());
}

int LabelLaw::bin_of(const Vector& x, const Vector& z) const {
  const double u = coeff_x.dot(x) + coeff_z.dot(z) + offset;
  const long b = std::lround(u);
  return static_cast<int>(std::clamp<long>(b, 0, bin_count() - 1));
}

int LabelLaw::clean_label(const Vector& x, const Vector& z) const {
  const int b = bin_of(x, z);
  return relabel.empty() ? b : relabel[static_cast<std::size_t>(b)];
}

int LabelLaw::sample_label(const Vector& x, const Vector& z, Rng& rng) const {
  const int clean = clean_label(x, z);
  if (p_flip <= 0.0) return clean;
  if (rng.uniform() >= p_flip) return clean;
  // Flip to a uniform draw over the other classes.
  const int shift = 1 + static_cast<int>(rng.uniform_int(num_classes - 1));
  return (clean + shift) % num_classes;
}

void LabelLaw::validate(Index input_dim, Index latent_dim) const {
  require(num_classes >= 2, "label law: need at least 2 classes");
  require(p_flip >= 0.0 && p_flip < 1.0, "label law: p_flip must lie in [0, 1)");
  require(coeff_x.size() == input_dim, "label law: coeff_x dimension mismatch");
  require(coeff_z.size() == latent_dim, "label law: coeff_z dimension mismatch");
  for (int c : relabel) {
    require(c >= 0 && c < num_classes, "label law: relabel entry out of class range");
  }
}

const FiniteSupport& SyntheticProblem::finite_support() const {
  if (!finite()) throw Error("problem has generative support; finite support required");
  return std::get<FiniteSupport>(support);
}

double SyntheticProblem::weak_score(const Vector& x) const { return beta0.dot(g0(x)); }

Vector SyntheticProblem::weak_scores(const Matrix& x_rows) const {
  return g0.apply_rows(x_rows) * beta0;
}

int SyntheticProblem::weak_class_of_score(double score) const {
  const long w = std::lround(score);
  if (std::abs(score - static_cast<double>(w)) > 1e-9 || w < 0 || w >= weak_classes) {
    throw Error("weak score " + fmt_full(score) + " is not an exact class in [0, " +
                std::to_string(weak_classes) + ")");
  }
  return static_cast<int>(w);
}

void SyntheticProblem::validate() const {
  require(input_dim >= 1, "problem: input_dim must be >= 1");
  require(latent_dim >= 1, "problem: latent_dim must be >= 1");
  require(g0.weights.rows() == latent_dim && g0.weights.cols() == input_dim,
          "problem: g0 weight shape mismatch");
  require(g0.bias.size() == latent_dim, "problem: g0 bias size mismatch");
  require(beta0.size() == latent_dim, "problem: beta0 size mismatch");
  if (weak_kind == WeakKind::Categorical) {
    require(weak_classes >= 2, "problem: categorical weak labels need k >= 2");
  }
  label_law.validate(input_dim, latent_dim);
  if (finite()) {
    const FiniteSupport& fs = finite_support();
    require(fs.atoms.cols() == input_dim, "problem: atom dimension mismatch");
    require(fs.probs.size() == fs.atoms.rows(), "problem: probs/atoms size mismatch");
    require(fs.probs.minCoeff() >= 0.0, "problem: negative atom probability");
    require(std::abs(fs.probs.sum() - 1.0) <= 1e-12, "problem: atom probabilities must sum to 1");
    if (weak_kind == WeakKind::Categorical) {
      // The identity beta0 . g0(x) = W must hold exactly on every atom.
      for (Index i = 0; i < fs.atoms.rows(); ++i) {
        if (fs.probs[i] == 0.0) continue;
        weak_class_of_score(weak_score(fs.atoms.row(i).transpose()));
      }
    }
  }
}

WeakCorruption WeakCorruption::uniform_noise(double keep_prob, int classes) {
  require(keep_prob >= 0.0 && keep_prob <= 1.0, "uniform noise: keep_prob must lie in [0, 1]");
  require(classes >= 2, "uniform noise: need at least 2 classes");
  WeakCorruption c;
  c.kind = Kind::UniformNoise;
  c.keep_prob = keep_prob;
  c.classes = classes;
  return c;
}

WeakCorruption WeakCorruption::coarse(int modulus) {
  require(modulus >= 2, "coarse corruption: modulus must be >= 2");
  WeakCorruption c;
  c.kind = Kind::Coarse;
  c.modulus = modulus;
  return c;
}

WeakCorruption WeakCorruption::from_annotator(std::shared_ptr<const Annotator> handle) {
  require(handle != nullptr && handle->label_fn != nullptr, "annotator corruption: empty handle");
  require(handle->target_accuracy > 0.0 && handle->target_accuracy <= 1.0,
          "annotator corruption: target_accuracy must lie in (0, 1]");
  WeakCorruption c;
  c.kind = Kind::Annotator;
  c.annotator = std::move(handle);
  return c;
}

int apply_coarse(int y, int modulus) {
  require(modulus >= 2, "apply_coarse: modulus must be >= 2");
  require(y >= 0, "apply_coarse: label must be nonnegative");
  return y % modulus;
}

int apply_uniform_noise(int y, double keep_prob, int classes, Rng& rng) {
  require(keep_prob >= 0.0 && keep_prob <= 1.0, "apply_uniform_noise: keep_prob in [0, 1]");
  require(classes >= 2 && y >= 0 && y < classes, "apply_uniform_noise: label out of range");
  if (rng.uniform() < keep_prob) return y;
  // Re-draw uniformly over all classes, including back to itself.
  return static_cast<int>(rng.uniform_int(classes));
}

void SeedRegistry::claim(std::uint64_t seed) {
  if (!used_.insert(seed).second) {
    throw Error("seed " + std::to_string(seed) + " was already used with this registry");
  }
}

Dataset sample_strong(const SyntheticProblem& problem, Index n, std::uint64_t seed,
                      SeedRegistry* registry) {
  require(n >= 1, "sample_strong: n must be >= 1");
  if (registry != nullptr) registry->claim(seed);
  Rng rng(derive_seed(seed, "sample_strong"));
  Dataset out;
  out.kind = DatasetKind::StrongPairs;
  out.seed = seed;
  out.x.resize(n, problem.input_dim);
  out.labels.resize(n);

  std::optional<Vector> cdf;
  if (problem.finite()) cdf = cumulative(problem.finite_support().probs);
  for (Index i = 0; i < n; ++i) {
    Vector x;
    if (cdf) {
      x = problem.finite_support().atoms.row(draw_index(*cdf, rng)).transpose();
    } else {
      x = sample_input(std::get<GenerativeSupport>(problem.support), problem.input_dim, rng);
    }
    const Vector z = problem.g0(x);
    out.x.row(i) = x.transpose();
    out.labels[i] = static_cast<double>(problem.label_law.sample_label(x, z, rng));
  }
  return out;
}

Dataset sample_weak(const SyntheticProblem& problem, Index m, std::uint64_t seed,
                    const WeakCorruption& corruption, SeedRegistry* registry) {
  require(m >= 1, "sample_weak: m must be >= 1");
  if (problem.weak_kind == WeakKind::Continuous &&
      corruption.kind != WeakCorruption::Kind::None) {
    throw Error("sample_weak: class-based corruption is incompatible with continuous weak labels");
  }
  if (registry != nullptr) registry->claim(seed);
  Rng rng(derive_seed(seed, "sample_weak"));
  Dataset out;
  out.kind = DatasetKind::WeakPairs;
  out.seed = seed;
  out.x.resize(m, problem.input_dim);
  out.labels.resize(m);

  std::optional<Vector> cdf;
  if (problem.finite()) cdf = cumulative(problem.finite_support().probs);
  for (Index i = 0; i < m; ++i) {
    Vector x;
    if (cdf) {
      x = problem.finite_support().atoms.row(draw_index(*cdf, rng)).transpose();
    } else {
      x = sample_input(std::get<GenerativeSupport>(problem.support), problem.input_dim, rng);
    }
    out.x.row(i) = x.transpose();
    const double score = problem.weak_score(x);
    if (problem.weak_kind == WeakKind::Continuous) {
      double w = score;
      if (problem.weak_noise_halfwidth > 0.0) {
        w += rng.uniform(-problem.weak_noise_halfwidth, problem.weak_noise_halfwidth);
      }
      out.labels[i] = w;
      continue;
    }
    int w = problem.weak_class_of_score(score);
    switch (corruption.kind) {
      case WeakCorruption::Kind::None:
        break;
      case WeakCorruption::Kind::UniformNoise:
        w = apply_uniform_noise(w, corruption.keep_prob, corruption.classes, rng);
        break;
      case WeakCorruption::Kind::Coarse:
        w = apply_coarse(w, corruption.modulus);
        break;
      case WeakCorruption::Kind::Annotator:
        w = static_cast<int>(std::lround(corruption.annotator->label_fn(x)));
        break;
    }
    out.labels[i] = static_cast<double>(w);
  }
  return out;
}

std::vector<SupportAtom> enumerate_support(const SyntheticProblem& problem) {
  const FiniteSupport& fs = problem.finite_support();
  const LabelLaw& law = problem.label_law;
  std::vector<SupportAtom> atoms;
  for (Index i = 0; i < fs.atoms.rows(); ++i) {
    const double p = fs.probs[i];
    if (p <= 0.0) continue;
    SupportAtom base;
    base.x = fs.atoms.row(i).transpose();
    base.z = problem.g0(base.x);
    const double score = problem.beta0.dot(base.z);
    base.w = problem.weak_kind == WeakKind::Categorical
                 ? static_cast<double>(problem.weak_class_of_score(score))
                 : score;
    const int clean = law.clean_label(base.x, base.z);
    if (law.p_flip <= 0.0) {
      base.y = clean;
      base.prob = p;
      atoms.push_back(std::move(base));
      continue;
    }
    const double other_mass = p * law.p_flip / static_cast<double>(law.num_classes - 1);
    for (int c = 0; c < law.num_classes; ++c) {
      SupportAtom a = base;
      a.y = c;
      a.prob = (c == clean) ? p * (1.0 - law.p_flip) : other_mass;
      atoms.push_back(std::move(a));
    }
  }
  double total = 0.0;
  for (const auto& a : atoms) total += a.prob;
  if (std::abs(total - 1.0) > 1e-12) {
    throw NumericError("enumerate_support: probabilities sum to " + fmt_full(total));
  }
  return atoms;
}

// --- CSV -------------------------------------------------------------------

namespace {

std::string kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::WeakPairs:
      return "weak";
    case DatasetKind::StrongPairs:
      return "strong";
    case DatasetKind::Augmented:
      return "augmented";
  }
  return "?";
}

DatasetKind kind_from_name(const std::string& name) {
  if (name == "weak") return DatasetKind::WeakPairs;
  if (name == "strong") return DatasetKind::StrongPairs;
  if (name == "augmented") return DatasetKind::Augmented;
  throw Error("unknown dataset kind: " + name);
}

}  // namespace

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::string out;
  out += "kind,seed\n";
  out += kind_name(dataset.kind) + "," + std::to_string(dataset.seed) + "\n";
  std::vector<std::string> header;
  for (Index j = 0; j < dataset.x.cols(); ++j) header.push_back("x_" + std::to_string(j));
  if (dataset.kind == DatasetKind::Augmented) {
    for (Index j = 0; j < dataset.z.cols(); ++j) header.push_back("z_" + std::to_string(j));
  }
  header.push_back(dataset.kind == DatasetKind::WeakPairs ? "w" : "y");
  out += join(header) + "\n";
  for (Index i = 0; i < dataset.rows(); ++i) {
    std::vector<std::string> fields;
    for (Index j = 0; j < dataset.x.cols(); ++j) fields.push_back(fmt_full(dataset.x(i, j)));
    if (dataset.kind == DatasetKind::Augmented) {
      for (Index j = 0; j < dataset.z.cols(); ++j) fields.push_back(fmt_full(dataset.z(i, j)));
    }
    fields.push_back(fmt_full(dataset.labels[i]));
    out += join(fields) + "\n";
  }
  write_text_file(path, out);
}

Dataset read_dataset_csv(const std::string& path) {
  const auto lines = read_lines(path);
  require(lines.size() >= 3, "dataset csv: too few lines in " + path);
  require(lines[0] == "kind,seed", "dataset csv: bad metadata header in " + path);
  const auto meta = split_line(lines[1]);
  require(meta.size() == 2, "dataset csv: bad metadata line in " + path);
  Dataset out;
  out.kind = kind_from_name(meta[0]);
  out.seed = std::stoull(meta[1]);
  const auto header = split_line(lines[2]);
  Index x_cols = 0, z_cols = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) ++x_cols;
    if (h.rfind("z_", 0) == 0) ++z_cols;
  }
  const Index rows = static_cast<Index>(lines.size()) - 3;
  out.x.resize(rows, x_cols);
  out.z.resize(rows, z_cols);
  out.labels.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    const auto fields = split_line(lines[static_cast<std::size_t>(i) + 3]);
    require(static_cast<Index>(fields.size()) == x_cols + z_cols + 1,
            "dataset csv: bad row width in " + path);
    for (Index j = 0; j < x_cols; ++j) out.x(i, j) = parse_double(fields[j], "x");
    for (Index j = 0; j < z_cols; ++j) out.z(i, j) = parse_double(fields[x_cols + j], "z");
    out.labels[i] = parse_double(fields.back(), "label");
  }
  return out;
}

// --- problem config --------------------------------------------------------

namespace {

std::string nonlin_name(Nonlin nl) {
  switch (nl) {
    case Nonlin::Identity:
      return "identity";
    case Nonlin::Clamp:
      return "clamp";
    case Nonlin::Sign:
      return "sign";
  }
  return "?";
}

Nonlin nonlin_from_name(const std::string& name) {
  if (name == "identity") return Nonlin::Identity;
  if (name == "clamp") return Nonlin::Clamp;
  if (name == "sign") return Nonlin::Sign;
  throw ConfigError("unknown nonlinearity: " + name);
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

std::vector<double> from_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix to_matrix(const std::vector<double>& flat, Index rows, Index cols,
                 const std::string& what) {
  if (static_cast<Index>(flat.size()) != rows * cols) {
    throw ConfigError(what + ": expected " + std::to_string(rows * cols) + " values, got " +
                      std::to_string(flat.size()));
  }
  Matrix out(rows, cols);
  Index k = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = flat[static_cast<std::size_t>(k++)];
  }
  return out;
}

std::vector<double> from_matrix(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

}  // namespace

Config problem_to_config(const SyntheticProblem& p) {
  Config cfg;
  cfg.set_long("problem.input_dim", p.input_dim);
  cfg.set_long("problem.latent_dim", p.latent_dim);
  if (p.finite()) {
    const FiniteSupport& fs = p.finite_support();
    cfg.set("problem.support.kind", "finite");
    cfg.set_doubles("problem.support.atoms", from_matrix(fs.atoms));
    cfg.set_doubles("problem.support.probs", from_vector(fs.probs));
  } else {
    const auto& gen = std::get<GenerativeSupport>(p.support);
    cfg.set("problem.support.kind", "generative");
    cfg.set("problem.support.law", gen.law == SampleLaw::UniformCube ? "uniform" : "gauss");
    cfg.set_double("problem.support.scale", gen.scale);
  }
  cfg.set_doubles("problem.g0.weights", from_matrix(p.g0.weights));
  cfg.set_doubles("problem.g0.bias", from_vector(p.g0.bias));
  cfg.set("problem.g0.nonlin", nonlin_name(p.g0.nonlin));
  cfg.set_doubles("problem.beta0", from_vector(p.beta0));
  cfg.set("problem.weak.kind", p.weak_kind == WeakKind::Categorical ? "categorical" : "continuous");
  cfg.set_long("problem.weak.classes", p.weak_classes);
  cfg.set("problem.weak.norm", p.weak_norm == WeakNorm::L1 ? "l1" : "l2");
  cfg.set_double("problem.weak.noise_halfwidth", p.weak_noise_halfwidth);
  cfg.set_doubles("problem.label.coeff_x", from_vector(p.label_law.coeff_x));
  cfg.set_doubles("problem.label.coeff_z", from_vector(p.label_law.coeff_z));
  cfg.set_double("problem.label.offset", p.label_law.offset);
  if (!p.label_law.relabel.empty()) {
    std::vector<double> rl(p.label_law.relabel.begin(), p.label_law.relabel.end());
    cfg.set_doubles("problem.label.relabel", rl);
  }
  cfg.set_long("problem.label.classes", p.label_law.num_classes);
  cfg.set_double("problem.label.p_flip", p.label_law.p_flip);
  return cfg;
}

Matrix sample_support_atoms(Index count, Index dim, SampleLaw law, double scale,
                            std::uint64_t seed) {
  Rng rng(derive_seed(seed, "support_atoms"));
  Matrix atoms(count, dim);
  for (Index i = 0; i < count; ++i) {
    const Vector x = law == SampleLaw::UniformCube ? rng.uniform_vector(dim, -scale, scale)
                                                   : rng.normal_vector(dim) * scale;
    atoms.row(i) = x.transpose();
  }
  return atoms;
}

SyntheticProblem problem_from_config(const Config& cfg) {
  SyntheticProblem p;
  p.input_dim = static_cast<int>(cfg.get_long("problem.input_dim"));
  p.latent_dim = static_cast<int>(cfg.get_long("problem.latent_dim"));
  const std::string support_kind = cfg.get_str("problem.support.kind");
  if (support_kind == "finite") {
    FiniteSupport fs;
    const auto flat = cfg.get_doubles("problem.support.atoms");
    const Index n = static_cast<Index>(flat.size()) / p.input_dim;
    fs.atoms = to_matrix(flat, n, p.input_dim, "problem.support.atoms");
    fs.probs = to_vector(cfg.get_doubles("problem.support.probs"));
    p.support = std::move(fs);
  } else if (support_kind == "finite_sampled") {
    FiniteSupport fs;
    const Index count = cfg.get_long("problem.support.count");
    const SampleLaw law =
        cfg.get_str_or("problem.support.law", "uniform") == "gauss" ? SampleLaw::Gaussian
                                                                    : SampleLaw::UniformCube;
    fs.atoms = sample_support_atoms(count, p.input_dim, law,
                                    cfg.get_double_or("problem.support.scale", 1.0),
                                    cfg.get_u64_or("problem.support.seed", 0));
    fs.probs = Vector::Constant(count, 1.0 / static_cast<double>(count));
    p.support = std::move(fs);
  } else if (support_kind == "generative") {
    GenerativeSupport gen;
    gen.law = cfg.get_str_or("problem.support.law", "uniform") == "gauss" ? SampleLaw::Gaussian
                                                                          : SampleLaw::UniformCube;
    gen.scale = cfg.get_double_or("problem.support.scale", 1.0);
    p.support = gen;
  } else {
    throw ConfigError("problem.support.kind: unknown value '" + support_kind + "'");
  }
  p.g0.weights = to_matrix(cfg.get_doubles("problem.g0.weights"), p.latent_dim, p.input_dim,
                           "problem.g0.weights");
  p.g0.bias = to_vector(cfg.get_doubles("problem.g0.bias"));
  p.g0.nonlin = nonlin_from_name(cfg.get_str("problem.g0.nonlin"));
  p.beta0 = to_vector(cfg.get_doubles("problem.beta0"));
  p.weak_kind = cfg.get_str("problem.weak.kind") == "continuous" ? WeakKind::Continuous
                                                                 : WeakKind::Categorical;
  p.weak_classes = static_cast<int>(cfg.get_long_or("problem.weak.classes", 2));
  p.weak_norm = cfg.get_str_or("problem.weak.norm", "l2") == "l1" ? WeakNorm::L1 : WeakNorm::L2;
  p.weak_noise_halfwidth = cfg.get_double_or("problem.weak.noise_halfwidth", 0.0);
  p.label_law.coeff_x = to_vector(cfg.get_doubles("problem.label.coeff_x"));
  p.label_law.coeff_z = to_vector(cfg.get_doubles("problem.label.coeff_z"));
  p.label_law.offset = cfg.get_double_or("problem.label.offset", 0.0);
  if (cfg.has("problem.label.relabel")) {
    for (double v : cfg.get_doubles("problem.label.relabel")) {
      p.label_law.relabel.push_back(static_cast<int>(std::lround(v)));
    }
  }
  p.label_law.num_classes = static_cast<int>(cfg.get_long("problem.label.classes"));
  p.label_law.p_flip = cfg.get_double_or("problem.label.p_flip", 0.0);
  p.validate();
  return p;
}

}  // namespace weaksup
