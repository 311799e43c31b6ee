#pragma once

#include "mcml/optimizer.hpp"

#include <cstdint>
#include <vector>

namespace mcml {

/// Finite outcome space listed explicitly: one column of t(y) and one
/// log base-measure entry per outcome.
struct EnumeratedSpace {
  Matrix stats;
  Vector log_base;

  Eigen::Index size() const { return log_base.size(); }
  int dim() const { return int(stats.rows()); }
};

EnumeratedSpace enumerate_space(const BinomialModel& model);
/// Lattice configurations in the order of for_each_lattice; d <= 4.
EnumeratedSpace enumerate_space(const AutologisticModel& model);

/// pi_theta as log probability masses over the space.
Vector target_log_masses(const EnumeratedSpace& space, const Theta& theta);

/// Log masses of an instrumental density at every outcome of the space.
Vector instrumental_log_masses(const BinomialPmf& h);
Vector instrumental_log_masses(const AutologisticModel& model, const PseudoLikelihoodDensity& h);

/// Asymptotic covariance D^{-1} V D^{-1} of sqrt(m)(theta_hat_m - theta*).
struct SandwichCov {
  Matrix D;
  Matrix V;
  Matrix sigma;
  double trace_sigma = 0.0;
};

/// eta(y) / c(theta*) times the base measure, one column per outcome:
/// (t(y) - E t) pi_theta*(y). Columns sum to zero (score identity).
Matrix eta_values(const EnumeratedSpace& space, const Theta& theta_star);

/// xi(y) / c(theta*) = (t(y) - E t) pi(y) / h(y), the per-draw score error of
/// importance sampling under h. Columns where h = 0 are zero when eta = 0 and
/// +inf otherwise.
Matrix xi_values(const EnumeratedSpace& space, const Theta& theta_star, const Vector& log_h);

/// Exact D = -Cov_pi(t) and V = sum_y pi(y)^2 / h(y) (t - E t)(t - E t)'.
/// Throws NumericalError when h vanishes where eta does not.
SandwichCov exact_sandwich(const EnumeratedSpace& space, const Theta& theta_star,
                           const Vector& log_h);
SandwichCov exact_sandwich(const BinomialModel& model, const Theta& theta_star,
                           const BinomialPmf& h);

/// Log masses proportional to |D^{-1} eta(y)|.
Vector optimal_log_masses(const EnumeratedSpace& space, const Theta& theta_star);
BinomialPmf optimal_h(const BinomialModel& model, const Theta& theta_star);

/// Lower bound (sum_y |D^{-1} eta(y)|)^2 / c^2 on trace(sigma), attained at h_opt.
double schwarz_bound(const EnumeratedSpace& space, const Theta& theta_star);

/// E_h |xi / c|^{2+alpha}, the Lyapunov moment of one importance-sampling draw.
double lyapunov_moment(const EnumeratedSpace& space, const Theta& theta_star,
                       const Vector& log_h, double alpha);

// ---------------------------------------------------------------------------
// Empirical validation

/// Anderson-Darling test for normality with estimated mean and variance,
/// using the small-sample corrected statistic A*^2.
struct NormalityTest {
  double statistic = 0.0;
  double critical = 0.0;
  bool passed = false;
};

/// alpha must be one of 0.10, 0.05, 0.025, 0.01.
NormalityTest anderson_darling(std::vector<double> sample, double alpha);

enum class CltEstimator { ImportanceSampling, AdaptiveIS, Isremc };

/// Replication study of sqrt(m)(theta_hat_m - theta*) on the binomial model.
struct CltSettings {
  CltEstimator kind = CltEstimator::ImportanceSampling;
  int trials = 20;
  int y_obs = 14;
  /// Instrumental density for ImportanceSampling and Isremc; defaults to
  /// uniform when empty.
  std::vector<double> h_masses;
  IsremcConfig isremc{20, 1, 0, 1};
  /// Fixed psi for Isremc and the limit of psi_j for AdaptiveIS (which starts
  /// at 0); theta* when not finite.
  double psi_star = std::numeric_limits<double>::quiet_NaN();
  long m = 10000;
  long reps = 2000;
  std::uint64_t seed = 1;
  double rel_tol = 0.15;
  double alpha = 0.01;
  /// Increments drawn to estimate V for Isremc, whose target is not exact.
  long target_draws = 200000;
};

struct CltReport {
  double theta_star = 0.0;
  double target_sigma = 0.0;
  double empirical_var = 0.0;
  double empirical_mean = 0.0;
  double rel_error = 0.0;
  NormalityTest normality;
  long failures = 0;
  long used = 0;
  /// False when more than 5% of replications failed.
  bool valid = false;
  bool passed = false;
  std::vector<std::uint64_t> seeds;
  std::vector<double> theta_hat;
  std::vector<bool> converged;
};

CltReport clt_validate(const CltSettings& settings);

struct SllnReport {
  std::vector<long> schedule;
  std::vector<double> median_abs_error;
  bool decreasing = false;
  double band = 0.0;
  bool within_band = false;
  bool passed = false;
};

/// increments: reps x M, each row a sequence of conditionally unbiased
/// estimates of exact_value. Checks the median absolute error of the running
/// mean is non-increasing along `schedule` and at the last schedule point is
/// at most band_multiplier standard errors.
SllnReport slln_validate(const Matrix& increments, double exact_value,
                         const std::vector<long>& schedule, double band_multiplier = 4.0);

}  // namespace mcml
