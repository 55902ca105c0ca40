#include "weaksup/theory.hpp"

#include "weaksup/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace weaksup {

WeakModelView view_of_problem_g0(const SyntheticProblem& problem) {
  WeakModelView v;
  const AffineMap g0 = problem.g0;
  v.latent = [g0](const Vector& x) { return g0(x); };
  v.beta = problem.beta0;
  return v;
}

WeakModelView view_of_trained(const PredictorFamily& family, const ParamVector& params) {
  require(family.role == Role::WeakMap, "view_of_trained: weak family required");
  WeakModelView v;
  v.latent = [family, params](const Vector& x) { return weak_latent(family, params, x); };
  if (family.head_mode == HeadMode::Trained) {
    v.beta = params.values.tail(family.latent_dim);
  } else {
    v.beta = Vector::Ones(family.latent_dim);
  }
  return v;
}

AtomList distribution_p(const SyntheticProblem& problem) { return enumerate_support(problem); }

AtomList distribution_p_hat(const SyntheticProblem& problem,
                            const std::function<Vector(const Vector&)>& g_hat) {
  AtomList atoms = enumerate_support(problem);
  for (auto& a : atoms) a.z = g_hat(a.x);
  return atoms;
}

double weak_distance(const SyntheticProblem& problem, double w_a, double w_b) {
  if (problem.weak_kind == WeakKind::Categorical) {
    const long ka = std::clamp<long>(std::lround(w_a), 0, problem.weak_classes - 1);
    const long kb = std::clamp<long>(std::lround(w_b), 0, problem.weak_classes - 1);
    return ka == kb ? 0.0 : 1.0;
  }
  return std::abs(w_a - w_b);
}

RiskReport exact_risk(const AtomList& atoms, const AtomLoss& loss, const std::string& loss_id) {
  require(!atoms.empty(), "exact_risk: empty atom list");
  double total = 0.0;
  for (const auto& a : atoms) total += a.prob * loss(a);
  if (!std::isfinite(total)) throw NumericError("exact_risk: non-finite value");
  RiskReport r;
  r.value = total;
  r.mode = EstimateMode::Exact;
  r.loss_id = loss_id;
  return r;
}

RiskReport monte_carlo_risk(const AtomList& atoms, const AtomLoss& loss, long samples,
                            std::uint64_t seed, const std::string& loss_id) {
  require(!atoms.empty(), "monte_carlo_risk: empty atom list");
  require(samples >= 2, "monte_carlo_risk: need at least 2 samples");
  Vector cdf(static_cast<Index>(atoms.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += atoms[i].prob;
    cdf[static_cast<Index>(i)] = acc;
  }
  Rng rng(derive_seed(seed, "mc_risk"));
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < samples; ++i) {
    const double u = rng.uniform();
    const double* it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
    Index idx = static_cast<Index>(it - cdf.data());
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    const double v = loss(atoms[static_cast<std::size_t>(idx)]);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  RiskReport r;
  r.value = mean;
  r.mode = EstimateMode::MonteCarlo;
  r.samples = samples;
  r.std_error = std::sqrt(var / n);
  r.loss_id = loss_id;
  return r;
}

AtomLoss pipeline_01_loss(const Pipeline& pipe) {
  return [&pipe](const TheoryAtom& a) { return pipe.predict(a.x) == a.y ? 0.0 : 1.0; };
}

AtomLoss strong_model_loss(const PredictorFamily& family, const ParamVector& params) {
  return [family, params](const TheoryAtom& a) {
    return loss_strong(family, params, a.x, a.z, a.y);
  };
}

RiskReport excess_risk(const AtomList& atoms, const AtomLoss& model, const AtomLoss& reference,
                       const std::string& loss_id) {
  RiskReport r = exact_risk(atoms, model, loss_id);
  r.value -= exact_risk(atoms, reference, loss_id).value;
  return r;
}

RiskReport measure_rate_m(const SyntheticProblem& problem, const WeakModelView& g_hat) {
  const FiniteSupport& fs = problem.finite_support();
  double total = 0.0;
  for (Index i = 0; i < fs.atoms.rows(); ++i) {
    if (fs.probs[i] <= 0.0) continue;
    const Vector x = fs.atoms.row(i).transpose();
    total += fs.probs[i] * weak_distance(problem, g_hat.head(x), problem.weak_score(x));
  }
  RiskReport r;
  r.value = total;
  r.mode = EstimateMode::Exact;
  r.loss_id = "weak";
  return r;
}

RiskReport measure_rate_n(const AtomList& q, const AtomLoss& f_hat, const AtomLoss& f_star) {
  return excess_risk(q, f_hat, f_star, "strong_excess");
}

CentralConditionEstimate central_condition_eps(const std::vector<AtomLoss>& probes,
                                               const AtomLoss& f_star, const AtomList& q,
                                               double eta, const std::string& comparator_id) {
  require(eta > 0.0, "central_condition_eps: eta must be positive");
  require(!probes.empty(), "central_condition_eps: probe list is empty");
  require(!q.empty(), "central_condition_eps: empty distribution");

  Vector star_losses(static_cast<Index>(q.size()));
  Vector masses(static_cast<Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) {
    star_losses[static_cast<Index>(i)] = f_star(q[i]);
    masses[static_cast<Index>(i)] = q[i].prob;
  }

  // The comparator probes itself with exponent 0, so epsilon_hat >= 0.
  double best = 0.0;
  Vector exponents(static_cast<Index>(q.size()));
  for (const auto& probe : probes) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double diff = probe(q[i]) - star_losses[static_cast<Index>(i)];
      exponents[static_cast<Index>(i)] = -eta * diff;
    }
    const double eps = log_sum_exp_weighted(exponents, masses) / eta;
    if (!std::isfinite(eps)) throw NumericError("central_condition_eps: non-finite estimate");
    best = std::max(best, eps);
  }

  CentralConditionEstimate est;
  est.eta = eta;
  est.epsilon_hat = best;
  est.family_sample_size = static_cast<int>(probes.size()) + 1;
  est.mode = EstimateMode::Exact;
  est.comparator_id = comparator_id;
  return est;
}

double relative_lipschitz_estimate(
    const SyntheticProblem& problem,
    const std::function<double(const Vector& x, const Vector& z, int y)>& strong_loss,
    const std::vector<std::pair<WeakModelView, WeakModelView>>& g_pairs,
    const std::vector<EvalPoint>& eval_points) {
  require(!eval_points.empty(), "relative_lipschitz_estimate: no eval points");
  require(!g_pairs.empty(), "relative_lipschitz_estimate: no feature-map pairs");
  double best = 0.0;
  bool informative = false;
  for (const auto& pair : g_pairs) {
    for (const auto& pt : eval_points) {
      const Vector za = pair.first.latent(pt.x);
      const Vector zb = pair.second.latent(pt.x);
      const double den =
          weak_distance(problem, pair.first.beta.dot(za), pair.second.beta.dot(zb));
      if (den == 0.0) continue;  // 0/0 guard
      informative = true;
      const double num = std::abs(strong_loss(pt.x, za, pt.y) - strong_loss(pt.x, zb, pt.y));
      best = std::max(best, num / den);
    }
  }
  if (!informative) throw Error("relative_lipschitz_estimate: no informative pairs");
  return best;
}

double cramer_chernoff_bound(const std::function<double(double)>& log_mgf, double eta, long n,
                             double t) {
  require(eta > 0.0, "cramer_chernoff_bound: eta must be positive");
  require(n >= 1, "cramer_chernoff_bound: n must be >= 1");
  const double lambda = log_mgf(eta);
  if (!std::isfinite(lambda)) throw NumericError("cramer_chernoff_bound: non-finite log-MGF");
  const double exponent = eta * static_cast<double>(n) * t + static_cast<double>(n) * lambda;
  if (exponent >= 0.0) return 1.0;
  return std::exp(exponent);
}

std::function<double(double)> logmgf_constant(double value) {
  return [value](double eta) { return -eta * value; };
}

std::function<double(double)> logmgf_two_point(double v0, double v1, double p1) {
  require(p1 >= 0.0 && p1 <= 1.0, "logmgf_two_point: p1 must lie in [0, 1]");
  return [v0, v1, p1](double eta) {
    Vector a(2);
    a << -eta * v0, -eta * v1;
    Vector w(2);
    w << 1.0 - p1, p1;
    return log_sum_exp_weighted(a, w);
  };
}

std::function<double(double)> logmgf_uniform(double a, double b) {
  require(b > a, "logmgf_uniform: need b > a");
  // E exp(-eta U) over U ~ Uniform[a, b] has the closed form
  // (exp(-eta a) - exp(-eta b)) / (eta (b - a)); evaluated in log space.
  return [a, b](double eta) {
    const double hi = -eta * a;  // the larger exponent for eta > 0
    return hi + std::log1p(-std::exp(-eta * (b - a))) - std::log(eta * (b - a));
  };
}

std::function<double(double)> logmgf_from_samples(Vector values) {
  require(values.size() >= 1, "logmgf_from_samples: empty sample");
  return [values](double eta) {
    const Vector a = -eta * values;
    return log_sum_exp(a) - std::log(static_cast<double>(values.size()));
  };
}

DecompositionReport decomposition_check(double measured_excess, double rate_m, double rate_n,
                                        double l_estimate, bool all_exact,
                                        bool l_is_upper_bound) {
  require(std::isfinite(measured_excess) && std::isfinite(rate_m) && std::isfinite(rate_n) &&
              std::isfinite(l_estimate),
          "decomposition_check: inputs must be finite");
  require(rate_m >= 0.0, "decomposition_check: rate_m must be nonnegative");
  DecompositionReport rep;
  rep.slack = 2.0 * l_estimate * rate_m + rate_n - measured_excess;
  const bool binding = all_exact && l_is_upper_bound;
  rep.violation = binding && rep.slack < 0.0;
  rep.informational = !binding;
  return rep;
}

RunLedger::RunLedger(std::string path) : path_(std::move(path)) {
  std::ifstream probe(path_);
  if (!probe.good()) {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw Error("cannot create ledger: " + path_);
    out << "quantity,mode,value,stderr,eta,notes\n";
  }
}

void RunLedger::append(const std::string& quantity, EstimateMode mode, double value,
                       double std_error, double eta, const std::string& notes) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to ledger: " + path_);
  out << quantity << "," << (mode == EstimateMode::Exact ? "exact" : "monte_carlo") << ","
      << fmt_full(value) << "," << fmt_full(std_error) << "," << fmt_full(eta) << "," << notes
      << "\n";
}

void RunLedger::append(const std::string& quantity, const RiskReport& report, double eta,
                       const std::string& notes) {
  append(quantity, report.mode, report.value, report.std_error, eta, notes);
}

}  // namespace weaksup
