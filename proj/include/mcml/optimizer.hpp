#pragma once

#include "mcml/estimators.hpp"
#include "mcml/samplers.hpp"

#include <concepts>
#include <string>
#include <vector>

namespace mcml {

/// Objective value with gradient and Hessian at one point.
struct Evaluation {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

template <typename O>
concept Objective = requires(const O& obj, const Theta& theta) {
  { obj.evaluate(theta) } -> std::convertible_to<Evaluation>;
};

struct NewtonConfig {
  int max_iters = 20;
  /// Stop once the gradient's sup-norm is at or below this.
  double grad_tol = 1e-6;
  /// Initial step scale in (0, 1].
  double damping = 1.0;
  double backtrack_factor = 0.5;
  double min_step = 1e-10;
  /// When false, every step is taken at full `damping` scale with no
  /// backtracking (raw Newton-Raphson).
  bool line_search = true;

  static NewtonConfig exact() {
    NewtonConfig cfg;
    cfg.grad_tol = 1e-8;
    cfg.max_iters = 100;
    return cfg;
  }
  static NewtonConfig monte_carlo() { return NewtonConfig{}; }

  void validate() const;
};

struct TrajectoryPoint {
  Theta theta;
  double value = 0.0;
  bool clamped = false;
  bool gradient_step = false;
};

struct FitResult {
  Theta theta_hat;
  double loglik_at_hat = 0.0;
  int iterations = 0;
  std::vector<TrajectoryPoint> trajectory;
  bool converged = false;
  int fallback_steps = 0;
  int clamp_events = 0;
  /// Empty on success; otherwise why the fit stopped.
  std::string diagnostic;
};

namespace detail {
bool ascent_direction(const Evaluation& ev, Vector& direction);
}

/// Damped Newton ascent theta <- theta + step (-H)^{-1} grad.
///
/// The step starts at cfg.damping and is multiplied by backtrack_factor
/// until the objective does not decrease. When -H is not positive definite
/// the direction falls back to the gradient, rescaled to unit sup-norm if
/// larger, and the step is flagged. A non-finite objective at theta0
/// throws NumericalError.
template <Objective O>
FitResult newton_maximize(const O& obj, const Theta& theta0, const NewtonConfig& cfg) {
  cfg.validate();
  require_finite(theta0, "starting point");
  FitResult fit;
  Theta theta = theta0;
  Evaluation ev = obj.evaluate(theta);
  if (!std::isfinite(ev.value) || !ev.grad.allFinite())
    throw NumericalError("objective is not finite at the starting point");
  fit.trajectory.push_back({theta, ev.value});

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (ev.grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) break;
    Vector direction;
    const bool newton = detail::ascent_direction(ev, direction);
    if (!newton) ++fit.fallback_steps;

    double step = cfg.damping;
    bool accepted = false;
    while (step >= cfg.min_step) {
      const Theta candidate = theta + step * direction;
      bool finite = candidate.allFinite();
      Evaluation next;
      if (finite) {
        try {
          next = obj.evaluate(candidate);
          finite = std::isfinite(next.value) && next.grad.allFinite();
        } catch (const NumericalError&) {
          finite = false;
        }
      }
      if (!cfg.line_search) {
        if (!finite) {
          fit.diagnostic = "objective became non-finite along the raw Newton step";
          break;
        }
      } else if (!finite || next.value < ev.value - 1e-12 * std::max(1.0, std::abs(ev.value))) {
        step *= cfg.backtrack_factor;
        continue;
      }
      theta = candidate;
      ev = std::move(next);
      accepted = true;
      break;
    }
    if (!accepted) {
      if (fit.diagnostic.empty()) fit.diagnostic = "line search could not increase the objective";
      break;
    }
    ++fit.iterations;
    fit.trajectory.push_back({theta, ev.value, false, !newton});
  }

  fit.theta_hat = theta;
  fit.loglik_at_hat = ev.value;
  fit.converged = ev.grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol;
  if (fit.converged) {
    fit.diagnostic.clear();
  } else if (fit.diagnostic.empty()) {
    fit.diagnostic = "gradient tolerance not reached within max_iters";
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Objectives

/// Monte Carlo log-likelihood theta' t_obs - log c_hat(theta).
class McLogLik {
 public:
  McLogLik(Vector t_obs, NormEstimateAtoms norm);

  Evaluation evaluate(const Theta& theta) const;
  const NormEstimateAtoms& norm() const { return norm_; }
  const Vector& t_obs() const { return t_obs_; }

 private:
  Vector t_obs_;
  NormEstimateAtoms norm_;
};

/// Exact log-likelihood theta' t_obs - log c(theta) on oracle-feasible models.
class ExactLogLik {
 public:
  ExactLogLik(ModelSpec model, Vector t_obs, int cap = kDefaultExactCap);
  Evaluation evaluate(const Theta& theta) const;

 private:
  ModelSpec model_;
  Vector t_obs_;
  int cap_;
};

/// Log pseudo-likelihood sum_r log P(y_r | observed neighbours), a logistic
/// regression of each site on (1, occupied-neighbour count).
class PseudoLogLik {
 public:
  explicit PseudoLogLik(const BinaryLattice& y_obs);
  Evaluation evaluate(const Theta& theta) const;

 private:
  // Sites grouped by (value, neighbour count): counts_[value][k].
  long counts_[2][5] = {};
};

// ---------------------------------------------------------------------------
// Fitting drivers

/// Chain-based estimate for the non-adaptive benchmark: one Gibbs chain at
/// psi from the all-zero lattice, `burn_in` sweeps discarded, m states kept
/// as atoms {exp(-psi' t)/m, t}. This is c_hat(theta)/c(psi).
NormEstimateAtoms benchmark_estimate(const AutologisticModel& model, const Theta& psi,
                                     long burn_in, long m, RngStream& rng);

/// Non-adaptive MCML: Newton maximization of theta' t_obs - log c_hat(theta)
/// built by benchmark_estimate, started at psi.
FitResult benchmark_mcml(const AutologisticModel& model, const Vector& t_obs, const Theta& psi,
                         long burn_in, long m, const NewtonConfig& cfg, RngStream& rng);

struct AdaptiveOptions {
  /// Keep psi at psi1 for every iteration.
  bool freeze_psi = false;
  /// Merge atoms with equal statistics after each iteration.
  bool compact = true;
};

/// Adaptive MCML driver, generic over the model.
///
/// Iteration j: increment at psi_j, running average into c_hat_j, then
/// psi_{j+1} = one Newton step on l_j from psi_j, clamped into `box`. The
/// result is newton_maximize on the final l_m from psi_{m+1}. The trajectory
/// holds (psi_j, l_j(psi_j)) for every iteration, clamping flagged, followed
/// by the final Newton iterates.
template <typename Model, typename DensityFamily, typename KernelFamily>
FitResult adaptive_mcml(const Model& model, const Vector& t_obs, DensityFamily&& density_of,
                        KernelFamily&& kernel_of, const Theta& psi1, long iters,
                        const IsremcConfig& isremc, const PsiBox& box, const NewtonConfig& cfg,
                        RngStream& rng, const AdaptiveOptions& options = {}) {
  if (iters < 1) throw ConfigError("adaptive iterations must be >= 1");
  isremc.validate();
  box.validate();
  require_finite(psi1, "psi1");
  if (psi1.size() != model.dim() || t_obs.size() != model.dim())
    throw ConfigError("psi1 / observed statistic dimension does not match the model");

  std::vector<TrajectoryPoint> path;
  int clamp_events = 0;
  NormEstimateAtoms estimate(model.dim());
  Theta psi = box.clamp(psi1);
  NewtonConfig one_step = cfg;
  one_step.max_iters = 1;

  for (long m = 1; m <= iters; ++m) {
    const auto increment =
        isremc_increment(model, psi, isremc, kernel_of(psi), density_of(psi), rng);
    estimate = merge_running(estimate, increment, m);
    if (options.compact) estimate.compact();
    McLogLik objective(t_obs, estimate);
    TrajectoryPoint point{psi, objective.evaluate(psi).value};
    if (!options.freeze_psi) {
      const FitResult step = newton_maximize(objective, psi, one_step);
      bool clamped = false;
      psi = box.clamp(step.theta_hat, &clamped);
      point.gradient_step = step.fallback_steps > 0;
      point.clamped = clamped;
      clamp_events += clamped ? 1 : 0;
    }
    path.push_back(std::move(point));
  }

  FitResult fit = newton_maximize(McLogLik(t_obs, estimate), psi, cfg);
  fit.clamp_events = clamp_events;
  path.insert(path.end(), fit.trajectory.begin(), fit.trajectory.end());
  fit.trajectory = std::move(path);
  return fit;
}

/// Adaptive MCML for the autologistic model: pseudo-likelihood instrumental
/// density conditioned on `reference` (the observed lattice) and the Gibbs
/// kernel.
FitResult adap_mcml(const AutologisticModel& model, const Vector& t_obs,
                    const BinaryLattice& reference, const Theta& psi1, long iters,
                    const IsremcConfig& isremc, const PsiBox& box, const NewtonConfig& cfg,
                    RngStream& rng, const AdaptiveOptions& options = {});

/// Binomial analogue: h_psi = pi_psi in closed form, identity kernel.
FitResult adap_mcml(const BinomialModel& model, int y_obs, double psi1, long iters,
                    const IsremcConfig& isremc, const PsiBox& box, const NewtonConfig& cfg,
                    RngStream& rng, const AdaptiveOptions& options = {});

/// Maximum pseudo-likelihood estimate from (0, 0). A constant lattice is
/// perfectly separated and returns a non-converged result with a diagnostic.
FitResult mpl_estimate(const BinaryLattice& y_obs, const NewtonConfig& cfg);

/// True when t_obs lies on the boundary of the achievable statistics, so no
/// finite MLE exists.
bool on_statistic_boundary(const ModelSpec& model, const Vector& t_obs);

/// Exact MLE by Newton on the exact log-likelihood from theta = 0.
/// Boundary statistics return a non-converged result with a diagnostic.
FitResult exact_mle(const ModelSpec& model, const Vector& t_obs, const NewtonConfig& cfg,
                    int cap = kDefaultExactCap);

}  // namespace mcml
