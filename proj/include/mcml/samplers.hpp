#pragma once

#include "mcml/model.hpp"
#include "mcml/rng.hpp"

#include <string>
#include <vector>

namespace mcml {

// ---------------------------------------------------------------------------
// Gibbs sampler for the autologistic model

/// P(y_site = 1 | rest) = logistic(theta0 + theta1 * occupied neighbours).
double gibbs_conditional(const Theta& theta, const BinaryLattice& y, int row, int col);

/// One deterministic row-major scan, resampling every site from its full
/// conditional. Leaves pi_theta invariant.
void gibbs_sweep(const Theta& theta, BinaryLattice& y, RngStream& rng);

/// Markov kernel P_psi: one Gibbs sweep at psi.
class GibbsKernel {
 public:
  explicit GibbsKernel(const Theta& psi);
  void operator()(BinaryLattice& y, RngStream& rng) const;

 private:
  double prob_[5];
};

/// Leaves every distribution invariant.
struct IdentityKernel {
  template <typename Y>
  void operator()(Y&, RngStream&) const {}
};

// ---------------------------------------------------------------------------
// Instrumental densities. log_density is the log probability mass of the
// outcome (counting measure); importance weights add the model's
// log_base_measure to the unnormalized log density.

/// Pseudo-likelihood product density: sites independent Bernoulli with
/// log-odds psi0 + psi1 * (occupied neighbours in the reference lattice).
class PseudoLikelihoodDensity {
 public:
  using outcome_type = BinaryLattice;

  PseudoLikelihoodDensity(const Theta& psi, const BinaryLattice& reference);

  BinaryLattice sample(RngStream& rng) const;
  double log_density(const BinaryLattice& y) const;

  /// P(site i = 1).
  double site_probability(int index) const { return prob_[index]; }
  int side() const { return side_; }
  const Theta& psi() const { return psi_; }

 private:
  int side_;
  Theta psi_;
  std::vector<double> prob_, log_one_, log_zero_;
};

BinaryLattice pseudolik_sample(const Theta& psi, const BinaryLattice& y_obs, RngStream& rng);
double pseudolik_log_density(const Theta& psi, const BinaryLattice& y_obs,
                             const BinaryLattice& y);

/// Normalized probability mass function on {0..n}.
class BinomialPmf {
 public:
  using outcome_type = int;

  /// Masses need not be normalized; throws ConfigError if all are zero.
  BinomialPmf(std::string kind, const Vector& masses);

  static BinomialPmf uniform(int n);
  /// Proportional to C(n,y) |y - y_obs| p^y (1-p)^(n-y), p = logistic(theta).
  static BinomialPmf optimal(int n, int y_obs, double theta);
  /// The model distribution pi_theta = Binomial(n, logistic(theta)).
  static BinomialPmf exponential_family(int n, double theta);

  int trials() const { return int(log_mass_.size()) - 1; }
  const std::string& kind() const { return kind_; }
  int sample(RngStream& rng) const;
  double log_density(int y) const;
  double probability(int y) const { return std::exp(log_density(y)); }
  const Vector& log_masses() const { return log_mass_; }

 private:
  std::string kind_;
  Vector log_mass_;
  std::vector<double> cdf_;
};

int binomial_sample(const BinomialPmf& h, RngStream& rng);

/// Exact draw from pi_psi for the binomial model; trivially preserves pi_psi.
class BinomialExactKernel {
 public:
  BinomialExactKernel(int n, double psi) : pmf_(BinomialPmf::exponential_family(n, psi)) {}
  void operator()(int& y, RngStream& rng) const { y = pmf_.sample(rng); }

 private:
  BinomialPmf pmf_;
};

}  // namespace mcml
