#pragma once

#include "mcml/atoms.hpp"
#include "mcml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace mcml {

/// Controls of one resampling + MCMC increment: l importance samples,
/// r resampled chain starts, s burn-in steps and n averaged steps per chain.
struct IsremcConfig {
  long l = 1000;
  long r = 1;
  long s = 100;
  long n = 900;

  void validate() const;
};

/// Componentwise box for the instrumental parameter.
struct PsiBox {
  Vector lower;
  Vector upper;

  static PsiBox uniform(int dim, double lo, double hi);
  static PsiBox unbounded(int dim);

  void validate() const;
  /// Projection onto the box; sets *clamped when any component moved.
  Theta clamp(const Theta& psi, bool* clamped = nullptr) const;
};

/// log[f_theta(y) * base(y) / h(y)] with h the instrumental mass function.
template <typename Model, typename Density>
double log_importance_weight(const Model& model, const Theta& theta, const Density& h,
                             const typename Model::outcome_type& y) {
  const double log_h = h.log_density(y);
  if (!(log_h > -std::numeric_limits<double>::infinity()))
    throw NumericalError("instrumental density is zero at a sampled outcome");
  return theta.dot(model.statistic(y)) + model.log_base_measure(y) - log_h;
}

/// Plain importance sampling in atom form: m i.i.d. draws from h, atom
/// weights base(Y)/(m h(Y)). Evaluating at theta gives (1/m) sum f/h.
template <typename Model, typename Density>
NormEstimateAtoms is_atoms(const Model& model, const Density& h, long m, RngStream& rng) {
  if (m < 1) throw ConfigError("importance sample size m must be >= 1");
  NormEstimateAtoms atoms(model.dim());
  const Theta zero = Theta::Zero(model.dim());
  const double log_m = std::log(double(m));
  for (long j = 0; j < m; ++j) {
    const auto y = h.sample(rng);
    atoms.add(log_importance_weight(model, zero, h, y) - log_m, model.statistic(y));
  }
  atoms.set_iterations(m);
  return atoms;
}

/// (1/m) sum_j f_theta(Y_j)/h(Y_j), Y_j i.i.d. from h.
template <typename Model, typename Density>
double is_estimate(const Model& model, const Theta& theta, const Density& h, long m,
                   RngStream& rng) {
  return atoms_eval(is_atoms(model, h, m, rng), theta).value();
}

/// What an adaptive-IS update rule sees after step j: the running sum
/// sum_{i<=j} f/h_{psi_i} in atom form and the parameter used at step j.
struct AdapisStep {
  long j;
  const NormEstimateAtoms& sum;
  const Theta& psi;

  /// The running estimate c_hat_j = sum / j.
  NormEstimateAtoms estimate() const {
    NormEstimateAtoms out = sum;
    out.scale(-std::log(double(j)));
    out.set_iterations(j);
    return out;
  }
};

/// Keeps psi fixed; adaptive IS then reduces to plain IS.
struct FrozenPsi {
  Theta operator()(const AdapisStep& step) const { return step.psi; }
};

/// Adaptive importance sampling. `family(psi)` returns the instrumental
/// density h_psi, `rule(step)` picks psi_{j+1} from the history only.
/// Returns atoms {base(Y_j) / (m h_{psi_j}(Y_j)), t(Y_j)}.
template <typename Model, typename Family, typename Rule>
NormEstimateAtoms adapis_run(const Model& model, Family&& family, Rule&& rule, const Theta& psi1,
                             long m, RngStream& rng, std::vector<Theta>* psi_path = nullptr) {
  if (m < 1) throw ConfigError("adaptive IS length m must be >= 1");
  NormEstimateAtoms sum(model.dim());
  const Theta zero = Theta::Zero(model.dim());
  Theta psi = psi1;
  for (long j = 1; j <= m; ++j) {
    if (psi_path) psi_path->push_back(psi);
    const auto h = family(psi);
    const auto y = h.sample(rng);
    sum.add(log_importance_weight(model, zero, h, y), model.statistic(y));
    if (j < m) psi = rule(AdapisStep{j, sum, psi});
  }
  sum.scale(-std::log(double(m)));
  sum.set_iterations(m);
  return sum;
}

/// One importance sampling / resampling / MCMC increment at psi.
///
/// Draws l points from h (normalized for psi), weights W_i = f_psi/h,
/// resamples r chain starts multinomially with probabilities W_i / W_sum,
/// runs `kernel` (which must preserve pi_psi) for s + n steps from each and
/// returns atoms {W_sum/(l r n) exp(-psi' t(Y_k^u)), t(Y_k^u)} for the last
/// n states of every chain. Evaluated at theta this is unbiased for c(theta).
template <typename Model, typename Density, typename Kernel>
NormEstimateAtoms isremc_increment(const Model& model, const Theta& psi, const IsremcConfig& cfg,
                                   const Kernel& kernel, const Density& h, RngStream& rng) {
  cfg.validate();
  if (psi.size() != model.dim()) throw ConfigError("psi dimension does not match the model");
  using Y = typename Model::outcome_type;

  std::vector<Y> draws;
  draws.reserve(std::size_t(cfg.l));
  Vector log_w(cfg.l);
  for (long i = 0; i < cfg.l; ++i) {
    draws.push_back(h.sample(rng));
    log_w[i] = log_importance_weight(model, psi, h, draws.back());
  }
  const double log_total = log_sum_exp(log_w);
  if (!std::isfinite(log_total)) throw NumericalError("degenerate importance weights: W_sum = 0");

  std::vector<double> cdf(static_cast<std::size_t>(cfg.l));
  double acc = 0;
  for (long i = 0; i < cfg.l; ++i) {
    acc += std::exp(log_w[i] - log_total);
    cdf[std::size_t(i)] = acc;
  }

  const double log_scale =
      log_total - std::log(double(cfg.l)) - std::log(double(cfg.r)) - std::log(double(cfg.n));
  NormEstimateAtoms atoms(model.dim());
  for (long k = 0; k < cfg.r; ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t pick = it == cdf.end() ? cdf.size() - 1 : std::size_t(it - cdf.begin());
    Y y = draws[pick];
    for (long step = 0; step < cfg.s; ++step) kernel(y, rng);
    for (long step = 0; step < cfg.n; ++step) {
      kernel(y, rng);
      const Vector t = model.statistic(y);
      atoms.add(log_scale - psi.dot(t), t);
    }
  }
  return atoms;
}

}  // namespace mcml
