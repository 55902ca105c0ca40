#include "weaksup/models.hpp"

#include "weaksup/io.hpp"

#include <algorithm>
#include <cmath>

namespace weaksup {

namespace {

// Views into a packed parameter vector. Blocks are stored column-major in
// the order weights, bias, (next layer...), head.
struct Block {
  Index offset;
  Index rows;
  Index cols;
  Index size() const { return rows * cols; }
};

struct Layout {
  Block w1, b1, w2, b2, head;
  bool has_hidden = false;
  bool has_bias = false;
  bool has_head = false;
  Index total = 0;
};

Layout layout_of(const PredictorFamily& f) {
  Layout lay;
  lay.has_hidden = f.arch == Arch::OneHidden;
  lay.has_bias = f.use_bias;
  lay.has_head = f.role == Role::WeakMap && f.head_mode == HeadMode::Trained;
  const Index din = f.feature_dim();
  const Index dout = f.output_dim();
  Index at = 0;
  auto place = [&at](Index rows, Index cols) {
    Block b{at, rows, cols};
    at += rows * cols;
    return b;
  };
  if (lay.has_hidden) {
    lay.w1 = place(f.hidden, din);
    if (lay.has_bias) lay.b1 = place(f.hidden, 1);
    lay.w2 = place(dout, f.hidden);
    if (lay.has_bias) lay.b2 = place(dout, 1);
  } else {
    lay.w1 = place(dout, din);
    if (lay.has_bias) lay.b1 = place(dout, 1);
  }
  if (lay.has_head) lay.head = place(f.latent_dim, 1);
  lay.total = at;
  return lay;
}

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

ConstMap view(const Vector& theta, const Block& b) {
  return ConstMap(theta.data() + b.offset, b.rows, b.cols);
}

MutMap view(Vector& theta, const Block& b) {
  return MutMap(theta.data() + b.offset, b.rows, b.cols);
}

void check_params(const PredictorFamily& f, const ParamVector& p) {
  if (p.values.size() != f.param_count()) {
    throw DimensionError("params for family '" + f.family_id + "': expected " +
                         std::to_string(f.param_count()) + " values, got " +
                         std::to_string(p.values.size()));
  }
  if (!p.values.allFinite()) throw NumericError("params contain non-finite values");
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector gather(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

std::vector<Index> all_rows(const Dataset& data) {
  std::vector<Index> rows(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Index>(i);
  return rows;
}

Matrix feature_rows(const PredictorFamily& f, const Dataset& data,
                    const std::vector<Index>& rows) {
  if (f.role == Role::WeakMap) {
    if (data.kind != DatasetKind::WeakPairs) {
      throw DimensionError("weak family expects a WeakPairs dataset");
    }
    return gather_rows(data.x, rows);
  }
  if (data.kind != DatasetKind::Augmented) {
    throw DimensionError("strong family expects an Augmented dataset");
  }
  Matrix in(static_cast<Index>(rows.size()), data.x.cols() + data.z.cols());
  in.leftCols(data.x.cols()) = gather_rows(data.x, rows);
  in.rightCols(data.z.cols()) = gather_rows(data.z, rows);
  return in;
}

// Forward pass keeping intermediates for backprop.
struct ForwardState {
  Matrix hidden;  // tanh activations (OneHidden)
  Matrix out;     // latents (weak) or scores (strong)
  Vector head;    // head scores (weak only)
};

ForwardState forward(const PredictorFamily& f, const Vector& theta, const Matrix& in) {
  const Layout lay = layout_of(f);
  ForwardState st;
  if (lay.has_hidden) {
    Matrix a1 = in * view(theta, lay.w1).transpose();
    if (lay.has_bias) a1.rowwise() += view(theta, lay.b1).col(0).transpose();
    st.hidden = a1.array().tanh();
    st.out = st.hidden * view(theta, lay.w2).transpose();
    if (lay.has_bias) st.out.rowwise() += view(theta, lay.b2).col(0).transpose();
  } else {
    st.out = in * view(theta, lay.w1).transpose();
    if (lay.has_bias) st.out.rowwise() += view(theta, lay.b1).col(0).transpose();
  }
  if (f.role == Role::WeakMap) {
    if (lay.has_head) {
      st.head = st.out * view(theta, lay.head).col(0);
    } else {
      st.head = st.out.rowwise().sum();  // fixed head of ones
    }
  }
  return st;
}

// Backprop from d(out) into parameter space; d_out must already include the
// 1/batch factor.
Vector backward(const PredictorFamily& f, const Vector& theta, const Matrix& in,
                const ForwardState& st, const Matrix& d_out) {
  const Layout lay = layout_of(f);
  Vector grad = Vector::Zero(lay.total);
  if (lay.has_hidden) {
    view(grad, lay.w2) = d_out.transpose() * st.hidden;
    if (lay.has_bias) view(grad, lay.b2).col(0) = d_out.colwise().sum().transpose();
    Matrix d_hidden = d_out * view(theta, lay.w2);
    Matrix d_a1 = d_hidden.array() * (1.0 - st.hidden.array().square());
    view(grad, lay.w1) = d_a1.transpose() * in;
    if (lay.has_bias) view(grad, lay.b1).col(0) = d_a1.colwise().sum().transpose();
  } else {
    view(grad, lay.w1) = d_out.transpose() * in;
    if (lay.has_bias) view(grad, lay.b1).col(0) = d_out.colwise().sum().transpose();
  }
  return grad;
}

int check_class_label(double label, int classes, const char* what) {
  const long y = std::lround(label);
  if (std::abs(label - static_cast<double>(y)) > 1e-9 || y < 0 || y >= classes) {
    throw DimensionError(std::string(what) + ": label " + fmt_full(label) +
                         " is not a class in [0, " + std::to_string(classes) + ")");
  }
  return static_cast<int>(y);
}

// Stable softmax of logits; returns probabilities.
Vector softmax(const Vector& logits) {
  const double hi = logits.maxCoeff();
  Vector p = (logits.array() - hi).exp();
  return p / p.sum();
}

// Surrogate loss for a categorical head score plus its derivative in t:
// cross-entropy of softmax over logits_j = -(t - j)^2.
double categorical_surrogate(double t, int w, int classes, double* dt) {
  Vector logits(classes);
  for (int j = 0; j < classes; ++j) logits[j] = -(t - j) * (t - j);
  const double lse = log_sum_exp(logits);
  if (dt != nullptr) {
    const Vector p = softmax(logits);
    double pull = 0.0;
    for (int j = 0; j < classes; ++j) pull += p[j] * (t - j);
    *dt = 2.0 * (t - w) - 2.0 * pull;
  }
  return -logits[w] + lse;
}

}  // namespace

int PredictorFamily::param_count() const { return static_cast<int>(layout_of(*this).total); }

void PredictorFamily::validate() const {
  require(radius > 0.0, "family: radius must be positive");
  require(loss_bound > 0.0, "family: loss bound must be positive");
  require(x_dim >= 1, "family: x_dim must be >= 1");
  if (arch == Arch::OneHidden) require(hidden >= 1, "family: hidden width must be >= 1");
  if (role == Role::WeakMap) {
    require(latent_dim >= 1, "family: latent_dim must be >= 1");
    if (weak_kind == WeakKind::Categorical) {
      require(weak_classes >= 2, "family: weak_classes must be >= 2");
    }
  } else {
    require(latent_dim >= 0, "family: latent_dim must be >= 0");
    require(num_classes >= 2, "family: num_classes must be >= 2");
  }
}

std::string PredictorFamily::default_id() const {
  std::string id = role == Role::WeakMap ? "weak" : "strong";
  id += arch == Arch::Linear ? ":linear" : ":h" + std::to_string(hidden);
  id += ":x" + std::to_string(x_dim) + ":s" + std::to_string(latent_dim);
  if (role == Role::StrongPredictor) id += ":k" + std::to_string(num_classes);
  return id;
}

PredictorFamily PredictorFamily::weak_map(int x_dim, int latent_dim, Arch arch, int hidden,
                                          double radius, WeakKind kind, int weak_classes,
                                          WeakNorm norm) {
  PredictorFamily f;
  f.role = Role::WeakMap;
  f.arch = arch;
  f.hidden = hidden;
  f.radius = radius;
  f.x_dim = x_dim;
  f.latent_dim = latent_dim;
  f.weak_kind = kind;
  f.weak_classes = weak_classes;
  f.weak_norm = norm;
  f.family_id = f.default_id();
  f.validate();
  return f;
}

PredictorFamily PredictorFamily::strong_predictor(int x_dim, int latent_dim, int num_classes,
                                                  Arch arch, int hidden, double radius,
                                                  StrongLoss loss, double loss_bound) {
  PredictorFamily f;
  f.role = Role::StrongPredictor;
  f.arch = arch;
  f.hidden = hidden;
  f.radius = radius;
  f.x_dim = x_dim;
  f.latent_dim = latent_dim;
  f.num_classes = num_classes;
  f.loss = loss;
  f.loss_bound = loss_bound;
  f.family_id = f.default_id();
  f.validate();
  return f;
}

Matrix family_forward(const PredictorFamily& family, const ParamVector& params,
                      const Matrix& inputs) {
  check_params(family, params);
  if (inputs.cols() != family.feature_dim()) {
    throw DimensionError("family_forward: input has " + std::to_string(inputs.cols()) +
                         " columns, family expects " + std::to_string(family.feature_dim()));
  }
  return forward(family, params.values, inputs).out;
}

Matrix weak_latent_rows(const PredictorFamily& family, const ParamVector& params,
                        const Matrix& x_rows) {
  require(family.role == Role::WeakMap, "weak_latent_rows: weak family required");
  return family_forward(family, params, x_rows);
}

Vector weak_latent(const PredictorFamily& family, const ParamVector& params, const Vector& x) {
  return weak_latent_rows(family, params, x.transpose()).row(0).transpose();
}

Vector weak_head_scores(const PredictorFamily& family, const ParamVector& params,
                        const Matrix& x_rows) {
  require(family.role == Role::WeakMap, "weak_head_scores: weak family required");
  check_params(family, params);
  return forward(family, params.values, x_rows).head;
}

double weak_head_score(const PredictorFamily& family, const ParamVector& params, const Vector& x) {
  return weak_head_scores(family, params, x.transpose())[0];
}

int weak_class_of_head(const PredictorFamily& family, double head_score) {
  const long c = std::lround(head_score);
  return static_cast<int>(std::clamp<long>(c, 0, family.weak_classes - 1));
}

Vector strong_scores(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                     const Vector& z) {
  require(family.role == Role::StrongPredictor, "strong_scores: strong family required");
  Matrix in(1, x.size() + z.size());
  in.leftCols(x.size()) = x.transpose();
  in.rightCols(z.size()) = z.transpose();
  return family_forward(family, params, in).row(0).transpose();
}

Matrix strong_scores_rows(const PredictorFamily& family, const ParamVector& params,
                          const Matrix& x_rows, const Matrix& z_rows) {
  require(family.role == Role::StrongPredictor, "strong_scores_rows: strong family required");
  Matrix in(x_rows.rows(), x_rows.cols() + z_rows.cols());
  in.leftCols(x_rows.cols()) = x_rows;
  in.rightCols(z_rows.cols()) = z_rows;
  return family_forward(family, params, in);
}

double strong_loss_from_scores(const PredictorFamily& family, const Vector& scores, int y) {
  require(y >= 0 && y < family.num_classes, "strong loss: label out of range");
  double raw = 0.0;
  if (family.loss == StrongLoss::CrossEntropyClipped) {
    raw = log_sum_exp(scores) - scores[y];
  } else {
    Vector diff = scores;
    diff[y] -= 1.0;
    raw = diff.squaredNorm();
  }
  return std::min(raw, family.loss_bound);
}

double loss_strong(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                   const Vector& z, int y) {
  return strong_loss_from_scores(family, strong_scores(family, params, x, z), y);
}

double weak_eval_loss(const PredictorFamily& family, double head_score, double w) {
  if (family.weak_kind == WeakKind::Categorical) {
    const int truth = check_class_label(w, family.weak_classes, "weak eval");
    return weak_class_of_head(family, head_score) == truth ? 0.0 : 1.0;
  }
  return std::min(std::abs(head_score - w), family.loss_bound);
}

double loss_weak(const PredictorFamily& family, const ParamVector& params, const Vector& x,
                 double w) {
  require(family.role == Role::WeakMap, "loss_weak: weak family required");
  return weak_eval_loss(family, weak_head_score(family, params, x), w);
}

double weak_surrogate_loss(const PredictorFamily& family, double head_score, double w) {
  if (family.weak_kind == WeakKind::Categorical) {
    const int truth = check_class_label(w, family.weak_classes, "weak surrogate");
    return categorical_surrogate(head_score, truth, family.weak_classes, nullptr);
  }
  const double d = head_score - w;
  return d * d;
}

double mean_training_loss(const PredictorFamily& family, const ParamVector& params,
                          const Dataset& data, const std::vector<Index>& rows) {
  require(!rows.empty(), "mean_training_loss: empty batch");
  check_params(family, params);
  const Matrix in = feature_rows(family, data, rows);
  const ForwardState st = forward(family, params.values, in);
  const Vector labels = gather(data.labels, rows);
  double total = 0.0;
  if (family.role == Role::WeakMap) {
    for (Index i = 0; i < labels.size(); ++i) {
      total += weak_surrogate_loss(family, st.head[i], labels[i]);
    }
  } else {
    for (Index i = 0; i < labels.size(); ++i) {
      const int y = check_class_label(labels[i], family.num_classes, "strong loss");
      total += strong_loss_from_scores(family, st.out.row(i).transpose(), y);
    }
  }
  if (!std::isfinite(total)) throw NumericError("mean_training_loss: non-finite loss");
  return total / static_cast<double>(labels.size());
}

double mean_eval_risk(const PredictorFamily& family, const ParamVector& params,
                      const Dataset& data, const std::vector<Index>& rows) {
  require(!rows.empty(), "mean_eval_risk: empty split");
  check_params(family, params);
  const Matrix in = feature_rows(family, data, rows);
  const ForwardState st = forward(family, params.values, in);
  const Vector labels = gather(data.labels, rows);
  double total = 0.0;
  if (family.role == Role::WeakMap) {
    for (Index i = 0; i < labels.size(); ++i) {
      total += weak_eval_loss(family, st.head[i], labels[i]);
    }
  } else {
    for (Index i = 0; i < labels.size(); ++i) {
      const int y = check_class_label(labels[i], family.num_classes, "strong eval");
      total += strong_loss_from_scores(family, st.out.row(i).transpose(), y);
    }
  }
  return total / static_cast<double>(labels.size());
}

Vector gradient(const PredictorFamily& family, const ParamVector& params, const Dataset& data,
                const std::vector<Index>& rows) {
  require(!rows.empty(), "gradient: empty batch");
  check_params(family, params);
  const Matrix in = feature_rows(family, data, rows);
  const ForwardState st = forward(family, params.values, in);
  const Vector labels = gather(data.labels, rows);
  const Index b = labels.size();
  const double inv_b = 1.0 / static_cast<double>(b);
  const Layout lay = layout_of(family);

  Matrix d_out;
  Vector head_grad;  // weak only
  if (family.role == Role::WeakMap) {
    Vector d_t(b);
    for (Index i = 0; i < b; ++i) {
      double dt = 0.0;
      if (family.weak_kind == WeakKind::Categorical) {
        const int w = check_class_label(labels[i], family.weak_classes, "weak gradient");
        categorical_surrogate(st.head[i], w, family.weak_classes, &dt);
      } else {
        dt = 2.0 * (st.head[i] - labels[i]);
      }
      d_t[i] = dt * inv_b;
    }
    const Vector beta = lay.has_head ? Vector(view(params.values, lay.head).col(0))
                                     : Vector(Vector::Ones(family.latent_dim));
    d_out = d_t * beta.transpose();
    if (lay.has_head) head_grad = st.out.transpose() * d_t;
  } else {
    d_out.setZero(b, family.num_classes);
    for (Index i = 0; i < b; ++i) {
      const int y = check_class_label(labels[i], family.num_classes, "strong gradient");
      const Vector scores = st.out.row(i).transpose();
      if (family.loss == StrongLoss::CrossEntropyClipped) {
        const double raw = log_sum_exp(scores) - scores[y];
        if (raw >= family.loss_bound) continue;  // clipped region is flat
        Vector g = softmax(scores);
        g[y] -= 1.0;
        d_out.row(i) = g.transpose() * inv_b;
      } else {
        Vector diff = scores;
        diff[y] -= 1.0;
        if (diff.squaredNorm() >= family.loss_bound) continue;
        d_out.row(i) = 2.0 * inv_b * diff.transpose();
      }
    }
  }

  Vector grad = backward(family, params.values, in, st, d_out);
  if (lay.has_head) view(grad, lay.head).col(0) = head_grad;
  if (!grad.allFinite()) throw NumericError("gradient: non-finite values encountered");
  return grad;
}

Vector gradient(const PredictorFamily& family, const ParamVector& params, const Dataset& data) {
  return gradient(family, params, data, all_rows(data));
}

Vector finite_difference_gradient(const PredictorFamily& family, const ParamVector& params,
                                  const Dataset& data, const std::vector<Index>& rows, double h) {
  ParamVector probe = params;
  Vector grad(params.values.size());
  for (Index i = 0; i < params.values.size(); ++i) {
    const double keep = probe.values[i];
    probe.values[i] = keep + h;
    const double up = mean_training_loss(family, probe, data, rows);
    probe.values[i] = keep - h;
    const double down = mean_training_loss(family, probe, data, rows);
    probe.values[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Vector project_l2(const Vector& theta, double radius) {
  require(radius > 0.0, "project_l2: radius must be positive");
  const double nrm = theta.norm();
  if (nrm <= radius) return theta;
  return theta * (radius / nrm);
}

ParamVector project_l2(ParamVector params, double radius) {
  params.values = project_l2(params.values, radius);
  return params;
}

ParamVector init_params(const PredictorFamily& family, std::uint64_t seed) {
  family.validate();
  const Layout lay = layout_of(family);
  Rng rng(derive_seed(seed, "init:" + family.family_id));
  Vector theta(lay.total);
  auto fill = [&](const Block& blk, Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
    for (Index i = 0; i < blk.size(); ++i) theta[blk.offset + i] = rng.uniform(-bound, bound);
  };
  const Index din = family.feature_dim();
  if (lay.has_hidden) {
    fill(lay.w1, din);
    if (lay.has_bias) fill(lay.b1, din);
    fill(lay.w2, family.hidden);
    if (lay.has_bias) fill(lay.b2, family.hidden);
  } else {
    fill(lay.w1, din);
    if (lay.has_bias) fill(lay.b1, din);
  }
  if (lay.has_head) fill(lay.head, family.latent_dim);
  ParamVector out{project_l2(theta, family.radius), family.family_id};
  return out;
}

double estimate_lipschitz_core(const std::function<Vector(const Vector&)>& loss_at, Index dim,
                               double radius, int probe_count, std::uint64_t seed) {
  require(probe_count >= 2, "estimate_param_lipschitz: probe_count must be >= 2");
  Rng rng(derive_seed(seed, "lipschitz"));
  double best = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    const Vector a = rng.ball_point(dim, radius);
    const Vector b = rng.ball_point(dim, radius);
    const double dist = (a - b).norm();
    if (dist < 1e-12) continue;
    const double diff = (loss_at(a) - loss_at(b)).cwiseAbs().maxCoeff();
    best = std::max(best, diff / dist);
  }
  return best;
}

double estimate_param_lipschitz(const PredictorFamily& family, const Dataset& data,
                                int probe_count, std::uint64_t seed) {
  const auto rows = all_rows(data);
  const Matrix in = feature_rows(family, data, rows);
  auto loss_at = [&](const Vector& theta) {
    const ForwardState st = forward(family, theta, in);
    Vector losses(static_cast<Index>(rows.size()));
    for (Index i = 0; i < losses.size(); ++i) {
      if (family.role == Role::WeakMap) {
        losses[i] = weak_surrogate_loss(family, st.head[i], data.labels[rows[i]]);
      } else {
        const int y = check_class_label(data.labels[rows[i]], family.num_classes, "lipschitz");
        losses[i] = strong_loss_from_scores(family, st.out.row(i).transpose(), y);
      }
    }
    return losses;
  };
  return estimate_lipschitz_core(loss_at, family.param_count(), family.radius, probe_count, seed);
}

void write_params_csv(const ParamVector& params, const std::string& path) {
  std::string out = "family_id," + params.family_id + "\n";
  std::vector<std::string> fields;
  fields.reserve(static_cast<std::size_t>(params.values.size()));
  for (Index i = 0; i < params.values.size(); ++i) fields.push_back(fmt_full(params.values[i]));
  out += join(fields) + "\n";
  write_text_file(path, out);
}

ParamVector read_params_csv(const std::string& path) {
  const auto lines = read_lines(path);
  require(lines.size() >= 2, "params csv: too few lines in " + path);
  const auto header = split_line(lines[0]);
  require(header.size() == 2 && header[0] == "family_id", "params csv: bad header in " + path);
  ParamVector out;
  out.family_id = header[1];
  const auto fields = split_line(lines[1]);
  out.values.resize(static_cast<Index>(fields.size()));
  for (Index i = 0; i < out.values.size(); ++i) {
    out.values[i] = parse_double(fields[static_cast<std::size_t>(i)], "param");
  }
  return out;
}

Config family_to_config(const PredictorFamily& f, const std::string& section) {
  Config cfg;
  cfg.set(section + ".arch", f.arch == Arch::Linear ? "linear" : "one_hidden");
  cfg.set_long(section + ".hidden", f.hidden);
  cfg.set(section + ".bias", f.use_bias ? "true" : "false");
  cfg.set_double(section + ".radius", f.radius);
  cfg.set_double(section + ".bound", f.loss_bound);
  if (f.role == Role::WeakMap) {
    cfg.set(section + ".head", f.head_mode == HeadMode::Trained ? "trained" : "fixed_ones");
  } else {
    cfg.set(section + ".loss",
            f.loss == StrongLoss::CrossEntropyClipped ? "cross_entropy" : "squared");
  }
  return cfg;
}

PredictorFamily family_from_config(const Config& cfg, const std::string& section, Role role) {
  PredictorFamily f;
  f.role = role;
  const std::string arch = cfg.get_str_or(section + ".arch", "one_hidden");
  if (arch == "linear") {
    f.arch = Arch::Linear;
  } else if (arch == "one_hidden") {
    f.arch = Arch::OneHidden;
  } else {
    throw ConfigError(section + ".arch: unknown value '" + arch + "'");
  }
  f.hidden = static_cast<int>(cfg.get_long_or(section + ".hidden", 8));
  f.use_bias = cfg.get_bool_or(section + ".bias", true);
  f.radius = cfg.get_double_or(section + ".radius", 10.0);
  f.loss_bound = cfg.get_double_or(section + ".bound", 10.0);
  if (role == Role::WeakMap) {
    const std::string head = cfg.get_str_or(section + ".head", "trained");
    if (head == "trained") {
      f.head_mode = HeadMode::Trained;
    } else if (head == "fixed_ones") {
      f.head_mode = HeadMode::FixedOnes;
    } else {
      throw ConfigError(section + ".head: unknown value '" + head + "'");
    }
  } else {
    const std::string loss = cfg.get_str_or(section + ".loss", "cross_entropy");
    if (loss == "cross_entropy") {
      f.loss = StrongLoss::CrossEntropyClipped;
    } else if (loss == "squared") {
      f.loss = StrongLoss::SquaredClipped;
    } else {
      throw ConfigError(section + ".loss: unknown value '" + loss + "'");
    }
  }
  return f;
}

}  // namespace weaksup
