#include "mcml/samplers.hpp"

#include <algorithm>

namespace mcml {

double gibbs_conditional(const Theta& theta, const BinaryLattice& y, int row, int col) {
  return logistic(theta[0] + theta[1] * y.neighbor_sum(row, col));
}

GibbsKernel::GibbsKernel(const Theta& psi) {
  require_finite(psi, "psi");
  if (psi.size() != 2) throw ConfigError("Gibbs kernel needs a 2-dimensional parameter");
  for (int k = 0; k <= 4; ++k) prob_[k] = logistic(psi[0] + psi[1] * k);
}

void GibbsKernel::operator()(BinaryLattice& y, RngStream& rng) const {
  const int d = y.side();
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) y.set(r, c, rng.bernoulli(prob_[y.neighbor_sum(r, c)]));
}

void gibbs_sweep(const Theta& theta, BinaryLattice& y, RngStream& rng) {
  GibbsKernel{theta}(y, rng);
}

PseudoLikelihoodDensity::PseudoLikelihoodDensity(const Theta& psi, const BinaryLattice& reference)
    : side_(reference.side()), psi_(psi) {
  require_finite(psi, "psi");
  if (psi.size() != 2) throw ConfigError("pseudo-likelihood density needs a 2-dimensional psi");
  const int n = reference.size();
  prob_.resize(n);
  log_one_.resize(n);
  log_zero_.resize(n);
  for (int r = 0; r < side_; ++r) {
    for (int c = 0; c < side_; ++c) {
      const int i = r * side_ + c;
      const double eta = psi[0] + psi[1] * reference.neighbor_sum(r, c);
      prob_[i] = logistic(eta);
      log_one_[i] = -softplus(-eta);
      log_zero_[i] = -softplus(eta);
    }
  }
}

BinaryLattice PseudoLikelihoodDensity::sample(RngStream& rng) const {
  BinaryLattice y(side_);
  for (int i = 0; i < y.size(); ++i) y.set(i, rng.bernoulli(prob_[i]));
  return y;
}

double PseudoLikelihoodDensity::log_density(const BinaryLattice& y) const {
  if (y.side() != side_) throw ConfigError("lattice side does not match the density");
  double total = 0;
  for (int i = 0; i < y.size(); ++i) total += y[i] ? log_one_[i] : log_zero_[i];
  return total;
}

BinaryLattice pseudolik_sample(const Theta& psi, const BinaryLattice& y_obs, RngStream& rng) {
  return PseudoLikelihoodDensity(psi, y_obs).sample(rng);
}

double pseudolik_log_density(const Theta& psi, const BinaryLattice& y_obs,
                             const BinaryLattice& y) {
  return PseudoLikelihoodDensity(psi, y_obs).log_density(y);
}

BinomialPmf::BinomialPmf(std::string kind, const Vector& masses) : kind_(std::move(kind)) {
  if (masses.size() < 2) throw ConfigError("binomial pmf needs n >= 1");
  if ((masses.array() < 0).any() || !masses.allFinite())
    throw ConfigError("pmf masses must be finite and non-negative");
  const double total = masses.sum();
  if (!(total > 0)) throw ConfigError("pmf has all-zero mass vector");
  log_mass_ = (masses / total).array().log().matrix();
  cdf_.resize(masses.size());
  double acc = 0;
  for (Eigen::Index y = 0; y < masses.size(); ++y) {
    acc += masses[y] / total;
    cdf_[y] = acc;
  }
}

BinomialPmf BinomialPmf::uniform(int n) {
  if (n < 1) throw ConfigError("binomial n must be >= 1");
  return BinomialPmf("uniform", Vector::Ones(n + 1));
}

BinomialPmf BinomialPmf::optimal(int n, int y_obs, double theta) {
  if (n < 1) throw ConfigError("binomial n must be >= 1");
  // Work in log space and shift before exponentiating.
  Vector logm(n + 1);
  for (int y = 0; y <= n; ++y) {
    logm[y] = y == y_obs ? -std::numeric_limits<double>::infinity()
                         : log_binomial_coefficient(n, y) + std::log(std::abs(y - y_obs)) +
                               theta * y;
  }
  const double shift = logm.maxCoeff();
  if (!std::isfinite(shift)) throw ConfigError("optimal pmf has all-zero mass vector");
  return BinomialPmf("optimal", exp_elementwise(logm.array() - shift).matrix());
}

BinomialPmf BinomialPmf::exponential_family(int n, double theta) {
  if (n < 1) throw ConfigError("binomial n must be >= 1");
  Vector logm(n + 1);
  for (int y = 0; y <= n; ++y) logm[y] = log_binomial_coefficient(n, y) + theta * y;
  const double shift = logm.maxCoeff();
  return BinomialPmf("target", exp_elementwise(logm.array() - shift).matrix());
}

int BinomialPmf::sample(RngStream& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) {
    // Rounding left the last cdf entry below u; take the last positive mass.
    int y = trials();
    while (y > 0 && !std::isfinite(log_mass_[y])) --y;
    return y;
  }
  return int(it - cdf_.begin());
}

double BinomialPmf::log_density(int y) const {
  if (y < 0 || y > trials()) return -std::numeric_limits<double>::infinity();
  return log_mass_[y];
}

int binomial_sample(const BinomialPmf& h, RngStream& rng) { return h.sample(rng); }

}  // namespace mcml
