#include "mcml/optimizer.hpp"

#include <sstream>

namespace mcml {

void NewtonConfig::validate() const {
  if (max_iters < 1) throw ConfigError("newton max_iters must be >= 1");
  if (!(grad_tol > 0) || !(min_step > 0)) throw ConfigError("newton tolerances must be > 0");
  if (!(damping > 0 && damping <= 1)) throw ConfigError("newton damping must be in (0, 1]");
  if (!(backtrack_factor > 0 && backtrack_factor < 1))
    throw ConfigError("newton backtrack_factor must be in (0, 1)");
}

namespace detail {

bool ascent_direction(const Evaluation& ev, Vector& direction) {
  const Matrix neg_hess = -ev.hess;
  Eigen::LLT<Matrix> llt(neg_hess);
  if (llt.info() == Eigen::Success) {
    direction = llt.solve(ev.grad);
    if (direction.allFinite() && direction.dot(ev.grad) > 0) return true;
  }
  const double norm = ev.grad.lpNorm<Eigen::Infinity>();
  direction = norm > 1 ? Vector(ev.grad / norm) : ev.grad;
  return false;
}

}  // namespace detail

McLogLik::McLogLik(Vector t_obs, NormEstimateAtoms norm)
    : t_obs_(std::move(t_obs)), norm_(std::move(norm)) {
  if (t_obs_.size() != norm_.dim())
    throw ConfigError("observed statistic dimension does not match the estimate");
}

Evaluation McLogLik::evaluate(const Theta& theta) const {
  const AtomsEval e = atoms_eval(norm_, theta);
  return {theta.dot(t_obs_) - e.log_value, t_obs_ - e.mean, -e.cov};
}

ExactLogLik::ExactLogLik(ModelSpec model, Vector t_obs, int cap)
    : model_(std::move(model)), t_obs_(std::move(t_obs)), cap_(cap) {
  if (t_obs_.size() != model_dim(model_))
    throw ConfigError("observed statistic dimension does not match the model");
}

Evaluation ExactLogLik::evaluate(const Theta& theta) const {
  const ExactMoments e = exact_moments(model_, theta, cap_);
  return {theta.dot(t_obs_) - e.log_norm, t_obs_ - e.mean, -e.cov};
}

PseudoLogLik::PseudoLogLik(const BinaryLattice& y_obs) {
  for (int r = 0; r < y_obs.side(); ++r)
    for (int c = 0; c < y_obs.side(); ++c) ++counts_[y_obs(r, c)][y_obs.neighbor_sum(r, c)];
}

Evaluation PseudoLogLik::evaluate(const Theta& theta) const {
  if (theta.size() != 2) throw ConfigError("pseudo-likelihood parameter must be 2-dimensional");
  Evaluation ev{0.0, Vector::Zero(2), Matrix::Zero(2, 2)};
  for (int k = 0; k <= 4; ++k) {
    const double eta = theta[0] + theta[1] * k;
    const double p = logistic(eta);
    const Eigen::Vector2d x(1.0, double(k));
    for (int v = 0; v <= 1; ++v) {
      const double c = double(counts_[v][k]);
      if (c == 0) continue;
      ev.value += c * (v * eta - softplus(eta));
      ev.grad += c * (v - p) * x;
      ev.hess -= c * p * (1 - p) * x * x.transpose();
    }
  }
  return ev;
}

NormEstimateAtoms benchmark_estimate(const AutologisticModel& model, const Theta& psi,
                                     long burn_in, long m, RngStream& rng) {
  model.validate();
  if (m < 1 || burn_in < 0) throw ConfigError("benchmark needs m >= 1 and burn-in >= 0");
  const GibbsKernel kernel(psi);
  BinaryLattice y(model.side);
  for (long i = 0; i < burn_in; ++i) kernel(y, rng);
  NormEstimateAtoms atoms(2);
  const double log_m = std::log(double(m));
  for (long u = 0; u < m; ++u) {
    kernel(y, rng);
    const Vector t = suff_stat(y).vector();
    atoms.add(-log_m - psi.dot(t), t);
  }
  atoms.compact();
  return atoms;
}

FitResult benchmark_mcml(const AutologisticModel& model, const Vector& t_obs, const Theta& psi,
                         long burn_in, long m, const NewtonConfig& cfg, RngStream& rng) {
  return newton_maximize(McLogLik(t_obs, benchmark_estimate(model, psi, burn_in, m, rng)), psi,
                         cfg);
}

FitResult adap_mcml(const AutologisticModel& model, const Vector& t_obs,
                    const BinaryLattice& reference, const Theta& psi1, long iters,
                    const IsremcConfig& isremc, const PsiBox& box, const NewtonConfig& cfg,
                    RngStream& rng, const AdaptiveOptions& options) {
  model.validate();
  if (reference.side() != model.side)
    throw ConfigError("reference lattice side does not match the model");
  return adaptive_mcml(
      model, t_obs, [&](const Theta& psi) { return PseudoLikelihoodDensity(psi, reference); },
      [](const Theta& psi) { return GibbsKernel(psi); }, psi1, iters, isremc, box, cfg, rng,
      options);
}

FitResult adap_mcml(const BinomialModel& model, int y_obs, double psi1, long iters,
                    const IsremcConfig& isremc, const PsiBox& box, const NewtonConfig& cfg,
                    RngStream& rng, const AdaptiveOptions& options) {
  model.validate();
  const int n = model.trials;
  return adaptive_mcml(
      model, Vector::Constant(1, double(y_obs)),
      [n](const Theta& psi) { return BinomialPmf::exponential_family(n, psi[0]); },
      [](const Theta&) { return IdentityKernel{}; }, Vector::Constant(1, psi1), iters, isremc,
      box, cfg, rng, options);
}

FitResult mpl_estimate(const BinaryLattice& y_obs, const NewtonConfig& cfg) {
  const SuffStat t = suff_stat(y_obs);
  if (t.ones == 0 || t.ones == y_obs.size()) {
    FitResult fit;
    fit.theta_hat = Vector::Zero(2);
    fit.loglik_at_hat = 0.0;
    fit.converged = false;
    fit.diagnostic = "pseudo-likelihood is perfectly separated (constant lattice); no finite MPL";
    return fit;
  }
  FitResult fit = newton_maximize(PseudoLogLik(y_obs), Vector::Zero(2), cfg);
  if (!fit.converged)
    fit.diagnostic = "MPL did not converge (possible separation): " + fit.diagnostic;
  return fit;
}

bool on_statistic_boundary(const ModelSpec& model, const Vector& t_obs) {
  if (t_obs.size() != model_dim(model))
    throw ConfigError("observed statistic dimension does not match the model");
  if (auto* a = std::get_if<AutologisticModel>(&model)) {
    const double sites = double(a->side) * a->side;
    if (t_obs[0] < 0 || t_obs[0] > sites || t_obs[1] < 0 || t_obs[1] > double(a->max_pairs()))
      throw ConfigError("observed statistic outside the achievable range");
    return t_obs[0] == 0 || t_obs[0] == sites || t_obs[1] == 0 ||
           t_obs[1] == double(a->max_pairs());
  }
  const double n = std::get<BinomialModel>(model).trials;
  if (t_obs[0] < 0 || t_obs[0] > n) throw ConfigError("binomial outcome outside {0..n}");
  return t_obs[0] == 0 || t_obs[0] == n;
}

FitResult exact_mle(const ModelSpec& model, const Vector& t_obs, const NewtonConfig& cfg, int cap) {
  if (on_statistic_boundary(model, t_obs)) {
    FitResult fit;
    fit.theta_hat = Vector::Zero(model_dim(model));
    fit.loglik_at_hat = 0.0;
    fit.converged = false;
    std::ostringstream os;
    os << "statistic (" << t_obs.transpose()
       << ") is on the boundary of the achievable set; the MLE does not exist";
    fit.diagnostic = os.str();
    return fit;
  }
  FitResult fit = newton_maximize(ExactLogLik(model, t_obs, cap), Vector::Zero(model_dim(model)),
                                  cfg);
  if (!fit.converged) fit.diagnostic = "exact MLE did not converge: " + fit.diagnostic;
  return fit;
}

}  // namespace mcml
