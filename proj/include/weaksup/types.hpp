#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace weaksup {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad config file, unknown key, malformed value.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Dimension or kind mismatch between data and model.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, divergence, overflow.
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Numerically stable log(sum_i w_i * exp(a_i)) for nonnegative weights.
// Works on any Eigen vector expressions of matching size.
template <typename DerivedA, typename DerivedW>
double log_sum_exp_weighted(const Eigen::MatrixBase<DerivedA>& a,
                            const Eigen::MatrixBase<DerivedW>& w) {
  const double hi = a.maxCoeff();
  if (!std::isfinite(hi)) throw NumericError("log_sum_exp: non-finite input");
  const double s = (w.derived().array() * (a.derived().array() - hi).exp()).sum();
  if (!(s > 0.0)) throw NumericError("log_sum_exp: nonpositive mass");
  return hi + std::log(s);
}

template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& a) {
  const double hi = a.maxCoeff();
  if (!std::isfinite(hi)) throw NumericError("log_sum_exp: non-finite input");
  return hi + std::log((a.derived().array() - hi).exp().sum());
}

}  // namespace weaksup
