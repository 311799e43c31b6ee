#pragma once

#include "mcml/model.hpp"

#include <vector>

namespace mcml {

/// Positive exponential mixture c_hat(theta) = sum_j a_j exp(theta' t_j).
///
/// Every Monte Carlo estimate of the normalizing constant produced by the
/// estimators has this form, so value, gradient and Hessian are available
/// exactly at any theta. Weights are stored as log a_j.
class NormEstimateAtoms {
 public:
  explicit NormEstimateAtoms(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  Eigen::Index size() const { return Eigen::Index(log_weights_.size()); }
  bool empty() const { return log_weights_.empty(); }

  /// Number of outer iterations averaged into this estimate.
  long iterations() const { return iterations_; }
  void set_iterations(long m) { iterations_ = m; }

  void add(double log_weight, const Vector& t);

  /// Multiply every weight by exp(log_factor).
  void scale(double log_factor);

  /// Append `other`'s atoms with weights multiplied by exp(log_factor).
  void append(const NormEstimateAtoms& other, double log_factor = 0.0);

  /// Merge atoms with identical statistic, summing their weights. Leaves the
  /// mixture unchanged up to rounding; atom order becomes lexicographic in t.
  void compact();

  Eigen::Map<const Vector> log_weights() const {
    return {log_weights_.data(), size()};
  }
  /// dim x size matrix of statistics, one column per atom.
  Eigen::Map<const Matrix> stats() const { return {stats_.data(), dim_, size()}; }

 private:
  int dim_;
  long iterations_ = 1;
  std::vector<double> log_weights_;
  std::vector<double> stats_;
};

/// Value, gradient and Hessian of an atom mixture, kept in normalized form:
/// log value, the weighted mean of t and the weighted covariance of t under
/// the atom distribution p_j proportional to a_j exp(theta' t_j).
struct AtomsEval {
  double log_value = 0.0;
  Vector mean;
  Matrix cov;
  double min_exponent = 0.0, max_exponent = 0.0;

  /// c_hat(theta). Throws NumericalError on overflow.
  double value() const;
  /// grad c_hat = c_hat * mean.
  Vector grad() const { return value() * mean; }
  /// hess c_hat = c_hat * (cov + mean mean').
  Matrix hess() const { return value() * (cov + mean * mean.transpose()); }
};

/// Throws ConfigError for an empty estimate or a dimension mismatch and
/// NumericalError when theta' t is not finite.
AtomsEval atoms_eval(const NormEstimateAtoms& est, const Theta& theta);

/// Running average: ((m-1)/m) est + (1/m) increment. m = 1 returns the
/// increment.
NormEstimateAtoms merge_running(const NormEstimateAtoms& est, const NormEstimateAtoms& increment,
                                long m);

}  // namespace mcml
