#include "mcml/asymptotics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace mcml {

EnumeratedSpace enumerate_space(const BinomialModel& model) {
  model.validate();
  const int n = model.trials;
  EnumeratedSpace space{Matrix(1, n + 1), Vector(n + 1)};
  for (int y = 0; y <= n; ++y) {
    space.stats(0, y) = y;
    space.log_base[y] = model.log_base_measure(y);
  }
  return space;
}

EnumeratedSpace enumerate_space(const AutologisticModel& model) {
  model.validate();
  const Eigen::Index count = Eigen::Index{1} << (model.side * model.side);
  EnumeratedSpace space{Matrix(2, count), Vector::Zero(count)};
  Eigen::Index i = 0;
  for_each_lattice(model.side, [&](const BinaryLattice& y) {
    space.stats.col(i++) = suff_stat(y).vector();
  });
  return space;
}

Vector target_log_masses(const EnumeratedSpace& space, const Theta& theta) {
  if (theta.size() != space.dim()) throw ConfigError("theta dimension does not match the space");
  const Vector lw = space.stats.transpose() * theta + space.log_base;
  return (lw.array() - log_sum_exp(lw)).matrix();
}

Vector instrumental_log_masses(const BinomialPmf& h) { return h.log_masses(); }

Vector instrumental_log_masses(const AutologisticModel& model, const PseudoLikelihoodDensity& h) {
  Vector out(Eigen::Index{1} << (model.side * model.side));
  Eigen::Index i = 0;
  for_each_lattice(model.side, [&](const BinaryLattice& y) { out[i++] = h.log_density(y); });
  return out;
}

namespace {

struct TargetMoments {
  Vector q;
  Vector mean;
  Matrix centered;
  Matrix D;
};

TargetMoments target_moments(const EnumeratedSpace& space, const Theta& theta_star) {
  TargetMoments tm;
  tm.q = exp_elementwise(target_log_masses(space, theta_star));
  tm.mean = space.stats * tm.q;
  tm.centered = space.stats.colwise() - tm.mean;
  tm.D = -(tm.centered * tm.q.asDiagonal() * tm.centered.transpose());
  return tm;
}

Matrix inverse_of(const Matrix& D) {
  Eigen::LDLT<Matrix> ldlt(D);
  if (ldlt.info() != Eigen::Success || !ldlt.isNegative())
    throw NumericalError("D is not negative definite");
  const Matrix inv = ldlt.solve(Matrix::Identity(D.rows(), D.cols()));
  if (!inv.allFinite()) throw NumericalError("D is singular");
  return inv;
}

// Entries of eta this small relative to the largest are treated as zero.
constexpr double kEtaZero = 1e-9;

}  // namespace

Matrix eta_values(const EnumeratedSpace& space, const Theta& theta_star) {
  const TargetMoments tm = target_moments(space, theta_star);
  return tm.centered * tm.q.asDiagonal();
}

Matrix xi_values(const EnumeratedSpace& space, const Theta& theta_star, const Vector& log_h) {
  if (log_h.size() != space.size()) throw ConfigError("h has the wrong number of outcomes");
  const Matrix eta = eta_values(space, theta_star);
  const double scale = eta.cwiseAbs().maxCoeff();
  Matrix xi(eta.rows(), eta.cols());
  for (Eigen::Index y = 0; y < space.size(); ++y) {
    if (std::isfinite(log_h[y])) {
      xi.col(y) = eta.col(y) / std::exp(log_h[y]);
    } else if (eta.col(y).cwiseAbs().maxCoeff() <= kEtaZero * scale) {
      xi.col(y).setZero();
    } else {
      xi.col(y).setConstant(std::numeric_limits<double>::infinity());
    }
  }
  return xi;
}

SandwichCov exact_sandwich(const EnumeratedSpace& space, const Theta& theta_star,
                           const Vector& log_h) {
  if (log_h.size() != space.size()) throw ConfigError("h has the wrong number of outcomes");
  const TargetMoments tm = target_moments(space, theta_star);
  const Matrix eta = tm.centered * tm.q.asDiagonal();
  const double scale = eta.cwiseAbs().maxCoeff();
  const int dim = space.dim();
  Matrix second = Matrix::Zero(dim, dim);
  Vector first = Vector::Zero(dim);
  for (Eigen::Index y = 0; y < space.size(); ++y) {
    if (!std::isfinite(log_h[y])) {
      if (eta.col(y).cwiseAbs().maxCoeff() > kEtaZero * scale)
        throw NumericalError("instrumental density vanishes where eta does not: infinite variance");
      continue;
    }
    const double h = std::exp(log_h[y]);
    first += eta.col(y);
    second += eta.col(y) * eta.col(y).transpose() / h;
  }
  SandwichCov out;
  out.D = tm.D;
  out.V = second - first * first.transpose();
  const Matrix Dinv = inverse_of(out.D);
  out.sigma = Dinv * out.V * Dinv;
  out.trace_sigma = out.sigma.trace();
  return out;
}

SandwichCov exact_sandwich(const BinomialModel& model, const Theta& theta_star,
                           const BinomialPmf& h) {
  if (h.trials() != model.trials) throw ConfigError("pmf support does not match n");
  return exact_sandwich(enumerate_space(model), theta_star, h.log_masses());
}

Vector optimal_log_masses(const EnumeratedSpace& space, const Theta& theta_star) {
  const TargetMoments tm = target_moments(space, theta_star);
  const Matrix scaled = inverse_of(tm.D) * tm.centered;
  Vector norms = scaled.colwise().norm().transpose();
  const double top = norms.maxCoeff();
  if (!(top > 0)) throw NumericalError("optimal instrumental density has all-zero mass");
  Vector logm(space.size());
  for (Eigen::Index y = 0; y < space.size(); ++y)
    logm[y] = norms[y] <= kEtaZero * top || tm.q[y] == 0
                  ? -std::numeric_limits<double>::infinity()
                  : std::log(norms[y]) + std::log(tm.q[y]);
  return (logm.array() - log_sum_exp(logm)).matrix();
}

BinomialPmf optimal_h(const BinomialModel& model, const Theta& theta_star) {
  return BinomialPmf("optimal",
                     exp_elementwise(optimal_log_masses(enumerate_space(model), theta_star)));
}

double schwarz_bound(const EnumeratedSpace& space, const Theta& theta_star) {
  const TargetMoments tm = target_moments(space, theta_star);
  const Matrix scaled = inverse_of(tm.D) * tm.centered;
  const double total = scaled.colwise().norm().dot(tm.q);
  return total * total;
}

double lyapunov_moment(const EnumeratedSpace& space, const Theta& theta_star,
                       const Vector& log_h, double alpha) {
  const Matrix xi = xi_values(space, theta_star, log_h);
  double total = 0;
  for (Eigen::Index y = 0; y < space.size(); ++y) {
    if (!std::isfinite(log_h[y])) continue;
    total += std::exp(log_h[y]) * std::pow(xi.col(y).norm(), 2 + alpha);
  }
  return total;
}

NormalityTest anderson_darling(std::vector<double> sample, double alpha) {
  static constexpr std::array<std::pair<double, double>, 4> kCritical{
      {{0.10, 0.631}, {0.05, 0.752}, {0.025, 0.873}, {0.01, 1.035}}};
  NormalityTest out;
  auto it = std::find_if(kCritical.begin(), kCritical.end(),
                         [&](const auto& e) { return std::abs(e.first - alpha) < 1e-12; });
  if (it == kCritical.end()) throw ConfigError("Anderson-Darling alpha must be 0.10/0.05/0.025/0.01");
  out.critical = it->second;
  const std::size_t n = sample.size();
  if (n < 8) throw ConfigError("Anderson-Darling needs at least 8 observations");
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / double(n);
  double ss = 0;
  for (double x : sample) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  if (!(sd > 0)) return out;
  std::sort(sample.begin(), sample.end());
  auto log_cdf = [](double z) { return std::log(0.5 * std::erfc(-z / std::sqrt(2.0))); };
  auto log_sf = [](double z) { return std::log(0.5 * std::erfc(z / std::sqrt(2.0))); };
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = (sample[i] - mean) / sd;
    const double hi = (sample[n - 1 - i] - mean) / sd;
    acc += double(2 * i + 1) * (log_cdf(lo) + log_sf(hi));
  }
  const double a2 = -double(n) - acc / double(n);
  out.statistic = a2 * (1.0 + 0.75 / double(n) + 2.25 / (double(n) * double(n)));
  out.passed = out.statistic <= out.critical;
  return out;
}

namespace {

// Adaptive-IS rule with forced diminishing adaptation: psi_{j+1} = psi* +
// (psi_j - psi*) j / (j + 1), so psi_j = psi* + (psi_1 - psi*) / j. psi
// stays between psi_1 and psi*, which keeps every weight variance finite.
struct DecayingToward {
  Theta psi_star;

  Theta operator()(const AdapisStep& step) const {
    const double j = double(step.j);
    return psi_star + (step.psi - psi_star) * (j / (j + 1));
  }
};

}  // namespace

CltReport clt_validate(const CltSettings& settings) {
  if (settings.m < 1 || settings.reps < 8)
    throw ConfigError("CLT check needs m >= 1 and reps >= 8");
  if (settings.y_obs <= 0 || settings.y_obs >= settings.trials)
    throw ConfigError("CLT check needs 0 < y_obs < n so that the MLE is finite");
  const BinomialModel model{settings.trials};
  const int n = model.trials;
  CltReport report;
  report.theta_star = std::log(double(settings.y_obs) / double(n - settings.y_obs));
  const Theta theta_star = Vector::Constant(1, report.theta_star);
  const Vector t_obs = Vector::Constant(1, double(settings.y_obs));
  const BinomialPmf h = settings.h_masses.empty()
                            ? BinomialPmf::uniform(n)
                            : BinomialPmf("custom", Eigen::Map<const Vector>(
                                                        settings.h_masses.data(),
                                                        Eigen::Index(settings.h_masses.size())));
  if (h.trials() != n) throw ConfigError("instrumental pmf support does not match n");
  const double psi_star =
      std::isfinite(settings.psi_star) ? settings.psi_star : report.theta_star;
  const Theta psi = Vector::Constant(1, psi_star);
  const EnumeratedSpace space = enumerate_space(model);

  switch (settings.kind) {
    case CltEstimator::ImportanceSampling:
      report.target_sigma = exact_sandwich(space, theta_star, h.log_masses()).sigma(0, 0);
      break;
    case CltEstimator::AdaptiveIS:
      report.target_sigma =
          exact_sandwich(space, theta_star, BinomialPmf::exponential_family(n, psi_star).log_masses())
              .sigma(0, 0);
      break;
    case CltEstimator::Isremc: {
      // V estimated from independent increments at (theta*, psi*).
      RngStream rng(RngStream::derive_seed(settings.seed, ~std::uint64_t{0}));
      const BinomialExactKernel kernel(n, psi_star);
      const ExactMoments exact = exact_moments(model, theta_star);
      const double c = std::exp(exact.log_norm);
      double sum = 0, sum_sq = 0;
      for (long i = 0; i < settings.target_draws; ++i) {
        const AtomsEval e = atoms_eval(isremc_increment(model, psi, settings.isremc, kernel, h, rng),
                                       theta_star);
        const double xi = (e.grad()[0] - t_obs[0] * e.value()) / c;
        sum += xi;
        sum_sq += xi * xi;
      }
      const double k = double(settings.target_draws);
      const double V = (sum_sq - sum * sum / k) / (k - 1);
      const double D = -exact.cov(0, 0);
      report.target_sigma = V / (D * D);
      break;
    }
  }

  NewtonConfig newton;
  newton.grad_tol = 1e-9;
  newton.max_iters = 50;
  std::vector<double> scaled;
  for (long rep = 0; rep < settings.reps; ++rep) {
    const std::uint64_t seed = RngStream::derive_seed(settings.seed, std::uint64_t(rep));
    RngStream rng(seed);
    NormEstimateAtoms atoms(1);
    switch (settings.kind) {
      case CltEstimator::ImportanceSampling:
        atoms = is_atoms(model, h, settings.m, rng);
        break;
      case CltEstimator::AdaptiveIS:
        atoms = adapis_run(
            model, [n](const Theta& p) { return BinomialPmf::exponential_family(n, p[0]); },
            DecayingToward{psi}, Vector::Zero(1), settings.m, rng);
        break;
      case CltEstimator::Isremc: {
        const BinomialExactKernel kernel(n, psi_star);
        for (long j = 0; j < settings.m; ++j) {
          atoms.append(isremc_increment(model, psi, settings.isremc, kernel, h, rng));
          if (j % 64 == 63) atoms.compact();
        }
        atoms.scale(-std::log(double(settings.m)));
        break;
      }
    }
    atoms.compact();
    bool ok = false;
    double theta_hat = std::numeric_limits<double>::quiet_NaN();
    try {
      const FitResult fit = newton_maximize(McLogLik(t_obs, atoms), theta_star, newton);
      ok = fit.converged;
      theta_hat = fit.theta_hat[0];
    } catch (const NumericalError&) {
      ok = false;
    }
    report.seeds.push_back(seed);
    report.theta_hat.push_back(theta_hat);
    report.converged.push_back(ok);
    if (!ok) {
      ++report.failures;
      continue;
    }
    scaled.push_back(std::sqrt(double(settings.m)) * (theta_hat - report.theta_star));
  }

  report.used = long(scaled.size());
  report.valid = report.failures * 20 <= settings.reps && report.used >= 8;
  if (report.used >= 2) {
    const double mean = std::accumulate(scaled.begin(), scaled.end(), 0.0) / double(report.used);
    double ss = 0;
    for (double x : scaled) ss += (x - mean) * (x - mean);
    report.empirical_mean = mean;
    report.empirical_var = ss / double(report.used - 1);
    report.rel_error = std::abs(report.empirical_var - report.target_sigma) / report.target_sigma;
  }
  if (report.used >= 8) report.normality = anderson_darling(scaled, settings.alpha);
  report.passed =
      report.valid && report.rel_error <= settings.rel_tol && report.normality.passed;
  return report;
}

SllnReport slln_validate(const Matrix& increments, double exact_value,
                         const std::vector<long>& schedule, double band_multiplier) {
  if (increments.rows() < 1 || increments.cols() < 1) throw ConfigError("no increments given");
  if (schedule.empty()) throw ConfigError("empty SLLN schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1 || schedule[i] > increments.cols() ||
        (i > 0 && schedule[i] <= schedule[i - 1]))
      throw ConfigError("SLLN schedule must be increasing within [1, M]");
  }
  SllnReport report;
  report.schedule = schedule;
  const Eigen::Index reps = increments.rows();
  std::vector<double> errors(static_cast<std::size_t>(reps));
  for (long m : schedule) {
    for (Eigen::Index r = 0; r < reps; ++r)
      errors[std::size_t(r)] = std::abs(increments.row(r).head(m).mean() - exact_value);
    std::nth_element(errors.begin(), errors.begin() + reps / 2, errors.end());
    report.median_abs_error.push_back(errors[std::size_t(reps / 2)]);
  }
  report.decreasing = true;
  for (std::size_t i = 1; i < report.median_abs_error.size(); ++i)
    if (report.median_abs_error[i] > report.median_abs_error[i - 1]) report.decreasing = false;

  const long last = schedule.back();
  const Matrix block = increments.leftCols(last);
  const double mean = block.mean();
  const double var = (block.array() - mean).square().sum() / std::max<double>(1, block.size() - 1);
  report.band = band_multiplier * std::sqrt(var / double(last));
  report.within_band = report.median_abs_error.back() <= report.band;
  report.passed = report.decreasing && report.within_band;
  return report;
}

}  // namespace mcml
