#pragma once

#include "weaksup/synth.hpp"
#include "weaksup/training.hpp"
#include "weaksup/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace weaksup {

enum class EstimateMode { Exact, MonteCarlo };

struct RiskReport {
  double value = 0.0;
  EstimateMode mode = EstimateMode::Exact;
  long samples = 0;       // Monte Carlo only
  double std_error = 0.0; // 0 in exact mode
  std::string loss_id;
};

struct CentralConditionEstimate {
  double eta = 1.0;
  double epsilon_hat = 0.0;
  int family_sample_size = 0;  // probes evaluated, comparator included
  EstimateMode mode = EstimateMode::Exact;
  std::string comparator_id;
};

// One atom of a distribution over (x, z, y) plus the weak label it carries.
using TheoryAtom = SupportAtom;
using AtomList = std::vector<TheoryAtom>;

// Loss of a fixed model evaluated on one atom.
using AtomLoss = std::function<double(const TheoryAtom&)>;

// A weak feature map as the theory sees it: a latent map plus its head.
struct WeakModelView {
  std::function<Vector(const Vector&)> latent;
  Vector beta;

  double head(const Vector& x) const { return beta.dot(latent(x)); }
};

WeakModelView view_of_problem_g0(const SyntheticProblem& problem);
WeakModelView view_of_trained(const PredictorFamily& family, const ParamVector& params);

// P as atoms over (x, z=g0(x), y); requires a finite problem.
AtomList distribution_p(const SyntheticProblem& problem);
// P-hat: same (x, y) marginal, z replaced by g_hat(x) (Algorithm line 4).
AtomList distribution_p_hat(const SyntheticProblem& problem,
                            const std::function<Vector(const Vector&)>& g_hat);

// The weak metric between two head outputs: 1{w != w'} in categorical mode
// (after binning to {0..k-1}), |w - w'| in continuous mode.
double weak_distance(const SyntheticProblem& problem, double w_a, double w_b);

// --- risk estimators -------------------------------------------------------

RiskReport exact_risk(const AtomList& atoms, const AtomLoss& loss, const std::string& loss_id);
// Monte Carlo counterpart over atoms sampled from the listed masses.
RiskReport monte_carlo_risk(const AtomList& atoms, const AtomLoss& loss, long samples,
                            std::uint64_t seed, const std::string& loss_id);

// 0/1 loss of the composed pipeline on a joint atom.
AtomLoss pipeline_01_loss(const Pipeline& pipe);
// Strong loss of f evaluated at the atom's (x, z, y).
AtomLoss strong_model_loss(const PredictorFamily& family, const ParamVector& params);

RiskReport excess_risk(const AtomList& atoms, const AtomLoss& model, const AtomLoss& reference,
                       const std::string& loss_id);

// Expected weak loss of g_hat under P_{X,W}; exact on finite problems.
RiskReport measure_rate_m(const SyntheticProblem& problem, const WeakModelView& g_hat);

// Excess strong risk of f_hat against f_star under the distribution q.
RiskReport measure_rate_n(const AtomList& q, const AtomLoss& f_hat, const AtomLoss& f_star);

// epsilon-hat of Definition 4: the max over probes f (f_star included) of
// (1/eta) log E_q exp(-eta (l_f - l_fstar)), computed with log-sum-exp.
CentralConditionEstimate central_condition_eps(const std::vector<AtomLoss>& probes,
                                               const AtomLoss& f_star, const AtomList& q,
                                               double eta, const std::string& comparator_id);

// Max over (g, g') pairs and eval points of the strong-loss change per unit
// of weak distance between the two heads; 0/0 pairs are skipped.
struct EvalPoint {
  Vector x;
  int y;
};
double relative_lipschitz_estimate(
    const SyntheticProblem& problem,
    const std::function<double(const Vector& x, const Vector& z, int y)>& strong_loss,
    const std::vector<std::pair<WeakModelView, WeakModelView>>& g_pairs,
    const std::vector<EvalPoint>& eval_points);

// min(1, exp(eta n t + n Lambda(eta))) for Lambda(eta) = log E exp(-eta Delta).
double cramer_chernoff_bound(const std::function<double(double)>& log_mgf, double eta, long n,
                             double t);

std::function<double(double)> logmgf_constant(double value);
std::function<double(double)> logmgf_two_point(double v0, double v1, double p1);
std::function<double(double)> logmgf_uniform(double a, double b);
std::function<double(double)> logmgf_from_samples(Vector values);

struct DecompositionReport {
  double slack = 0.0;      // 2 L rate_m + rate_n - excess
  bool violation = false;  // slack < 0 with exact inputs and a true upper-bound L
  bool informational = false;
};

DecompositionReport decomposition_check(double measured_excess, double rate_m, double rate_n,
                                        double l_estimate, bool all_exact, bool l_is_upper_bound);

// Appendable CSV ledger: quantity,mode,value,stderr,eta,notes.
class RunLedger {
 public:
  explicit RunLedger(std::string path);
  void append(const std::string& quantity, EstimateMode mode, double value, double std_error,
              double eta, const std::string& notes);
  void append(const std::string& quantity, const RiskReport& report, double eta,
              const std::string& notes);

 private:
  std::string path_;
};

}  // namespace weaksup
