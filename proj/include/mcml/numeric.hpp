#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Elementwise std::exp. Eigen's vectorized exp flushes -inf to the smallest
/// normal double instead of 0, which breaks exact zero masses.
template <typename Derived>
auto exp_elementwise(const Eigen::DenseBase<Derived>& x) {
  return x.derived().unaryExpr([](typename Derived::Scalar v) { return std::exp(v); });
}

/// log(sum_i exp(x_i)) with a max shift. Empty input gives -inf.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar shift = x.maxCoeff();
  if (!std::isfinite(shift)) return shift;
  return shift + std::log(exp_elementwise(x.derived().array() - shift).sum());
}

/// log(exp(a) + exp(b)).
template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log C(n, k).
inline double log_binomial_coefficient(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace mcml
