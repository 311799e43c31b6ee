#include "doctest.h"
#include "oracles.hpp"

#include "mcml/optimizer.hpp"

#include <algorithm>
#include <random>

using namespace mcml;

namespace {

struct Quadratic {
  Vector a;
  Evaluation evaluate(const Theta& th) const {
    return {-0.5 * (th - a).squaredNorm(), a - th, -Matrix::Identity(a.size(), a.size())};
  }
};

// Convex bowl: -H is negative definite everywhere, so Newton is never used.
struct Bowl {
  Evaluation evaluate(const Theta& th) const {
    return {0.5 * th.squaredNorm(), th, Matrix::Identity(th.size(), th.size())};
  }
};

// Strictly concave with a heavy tail: raw Newton from far away overshoots.
struct LogCosh {
  Evaluation evaluate(const Theta& th) const {
    const double x = th[0];
    Evaluation ev;
    ev.value = -std::log(std::cosh(x));
    ev.grad = Vector::Constant(1, -std::tanh(x));
    ev.hess = Matrix::Constant(1, 1, -1.0 / (std::cosh(x) * std::cosh(x)));
    return ev;
  }
};

BinaryLattice simulate(int d, const Eigen::Vector2d& th, long sweeps, std::uint64_t seed) {
  RngStream rng(seed);
  BinaryLattice y(d);
  const GibbsKernel k(th);
  for (long i = 0; i < sweeps; ++i) k(y, rng);
  return y;
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  return x[x.size() / 2];
}

}  // namespace

TEST_CASE("quadratic: one full Newton step") {
  const Quadratic q{Eigen::Vector2d(1.5, -2)};
  for (const Eigen::Vector2d start : {Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 7)}) {
    const auto fit = newton_maximize(q, start, NewtonConfig::exact());
    CHECK(fit.iterations == 1);
    CHECK(fit.converged);
    CHECK((fit.theta_hat - q.a).norm() < 1e-14);
  }
}

TEST_CASE("non-concave direction falls back to a scaled gradient step") {
  NewtonConfig cfg;
  cfg.max_iters = 3;
  const auto fit = newton_maximize(Bowl{}, Eigen::Vector2d(4, -1), cfg);
  CHECK(fit.fallback_steps == 3);
  CHECK(fit.trajectory[1].gradient_step);
  // unit sup-norm direction at full step
  CHECK(fit.trajectory[1].theta[0] == doctest::Approx(5));
  CHECK(fit.trajectory[1].theta[1] == doctest::Approx(-1.25));
  CHECK_FALSE(fit.converged);
  CHECK_FALSE(fit.diagnostic.empty());
}

TEST_CASE("damping versus raw Newton on a heavy-tailed objective") {
  const Theta start = Vector::Constant(1, 1.5);
  const auto damped = newton_maximize(LogCosh{}, start, NewtonConfig::exact());
  CHECK(damped.converged);
  CHECK(std::abs(damped.theta_hat[0]) < 1e-8);
  for (std::size_t i = 1; i < damped.trajectory.size(); ++i)
    CHECK(damped.trajectory[i].value >= damped.trajectory[i - 1].value - 1e-12);

  NewtonConfig raw = NewtonConfig::exact();
  raw.line_search = false;
  raw.max_iters = 5;
  const auto wild = newton_maximize(LogCosh{}, start, raw);
  CHECK_FALSE(wild.converged);
  CHECK(std::abs(wild.trajectory[1].theta[0]) > 1.5);
}

TEST_CASE("newton configuration and start errors") {
  NewtonConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = NewtonConfig{};
  bad.damping = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = NewtonConfig{};
  bad.backtrack_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = NewtonConfig{};
  bad.grad_tol = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(newton_maximize(Quadratic{Eigen::Vector2d(0, 0)}, Eigen::Vector2d(NAN, 0), NewtonConfig{}),
                  ConfigError);
  NormEstimateAtoms a(2);
  a.add(0.0, Eigen::Vector2d(1e3, 0));
  CHECK_THROWS_AS(newton_maximize(McLogLik(Eigen::Vector2d(1, 1), a), Eigen::Vector2d(1e306, 0), NewtonConfig{}),
                  NumericalError);
}

TEST_CASE("binomial exact MLE is the log-odds") {
  const auto fit = exact_mle(BinomialModel{10}, Vector::Constant(1, 7), NewtonConfig::exact());
  CHECK(fit.converged);
  CHECK(fit.theta_hat[0] == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-10));
  CHECK(fit.theta_hat[0] == doctest::Approx(0.847298).epsilon(1e-6));
  const auto ev = ExactLogLik(BinomialModel{10}, Vector::Constant(1, 7)).evaluate(fit.theta_hat);
  CHECK(std::abs(ev.grad[0]) <= 1e-8);
  const double p = 0.7;
  CHECK(fit.loglik_at_hat == doctest::Approx(7 * std::log(p) + 3 * std::log(1 - p)).epsilon(1e-12));
}

TEST_CASE("autologistic exact MLE matches moments") {
  for (const Eigen::Vector2d t : {Eigen::Vector2d(2, 1), Eigen::Vector2d(5, 3), Eigen::Vector2d(4, 2)}) {
    const int d = t == Eigen::Vector2d(2, 1) ? 2 : 3;
    const auto fit = exact_mle(AutologisticModel{d}, t, NewtonConfig::exact());
    REQUIRE(fit.converged);
    const auto ref = oracle::enumerate(d, fit.theta_hat[0], fit.theta_hat[1]);
    CHECK((ref.mean - t).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  // round an interior mean to an achievable statistic and recover a nearby parameter
  const Eigen::Vector2d th0(-0.4, 0.6);
  const Vector mean = exact_mean_suffstat(AutologisticModel{3}, th0);
  const Eigen::Vector2d t(std::round(mean[0]), std::round(mean[1]));
  const auto fit = exact_mle(AutologisticModel{3}, t, NewtonConfig::exact());
  REQUIRE(fit.converged);
  CHECK((exact_mean_suffstat(AutologisticModel{3}, fit.theta_hat) - Vector(t)).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((fit.theta_hat - th0).norm() < 1.0);
}

TEST_CASE("boundary statistics have no MLE") {
  CHECK(on_statistic_boundary(AutologisticModel{2}, Eigen::Vector2d(4, 4)));
  CHECK(on_statistic_boundary(AutologisticModel{2}, Eigen::Vector2d(0, 0)));
  CHECK(on_statistic_boundary(AutologisticModel{3}, Eigen::Vector2d(5, 0)));
  CHECK_FALSE(on_statistic_boundary(AutologisticModel{3}, Eigen::Vector2d(5, 3)));
  CHECK(on_statistic_boundary(BinomialModel{5}, Vector::Constant(1, 5)));
  CHECK_FALSE(on_statistic_boundary(BinomialModel{5}, Vector::Constant(1, 2)));
  CHECK_THROWS_AS(on_statistic_boundary(AutologisticModel{2}, Eigen::Vector2d(5, 0)), ConfigError);
  CHECK_THROWS_AS(on_statistic_boundary(BinomialModel{5}, Vector::Constant(1, 6)), ConfigError);

  const auto fit = exact_mle(AutologisticModel{2}, Eigen::Vector2d(4, 4), NewtonConfig::exact());
  CHECK_FALSE(fit.converged);
  CHECK(fit.diagnostic.find("boundary") != std::string::npos);
  CHECK_THROWS_AS(exact_mle(AutologisticModel{13}, Eigen::Vector2d(50, 50), NewtonConfig::exact()),
                  InfeasibleExactError);
}

TEST_CASE("log-likelihood derivatives match finite differences") {
  const Eigen::Vector2d t(20, 18);
  const ExactLogLik exact(AutologisticModel{6}, t);
  const BinaryLattice y = simulate(6, Eigen::Vector2d(-0.5, 0.5), 50, 4);
  const PseudoLogLik pl(y);
  std::mt19937 gen(2);
  NormEstimateAtoms atoms(2);
  for (int j = 0; j < 40; ++j) atoms.add(-0.1 * j, Eigen::Vector2d(double(gen() % 36), double(gen() % 60)));
  const McLogLik mc(t, atoms);
  const double h = 1e-5;
  const Eigen::Vector2d th(-0.6, 0.4);
  auto check = [&](const auto& obj) {
    const Evaluation ev = obj.evaluate(th);
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[k] = h;
      const auto up = obj.evaluate(th + e), down = obj.evaluate(th - e);
      CHECK((up.value - down.value) / (2 * h) == doctest::Approx(ev.grad[k]).epsilon(1e-5));
      CHECK((up.grad[0] - down.grad[0]) / (2 * h) == doctest::Approx(ev.hess(0, k)).epsilon(1e-4));
      CHECK((up.grad[1] - down.grad[1]) / (2 * h) == doctest::Approx(ev.hess(1, k)).epsilon(1e-4));
    }
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(ev.hess).eigenvalues().maxCoeff() <= 1e-9);
  };
  check(exact);
  check(pl);
  check(mc);
}

TEST_CASE("argmax is invariant to scaling all atom weights") {
  const BinaryLattice y = simulate(4, Eigen::Vector2d(-1, 0.75), 200, 8);
  const Vector t = suff_stat(y).vector();
  RngStream rng(5);
  NormEstimateAtoms atoms = benchmark_estimate(AutologisticModel{4}, Eigen::Vector2d(-1, 0.75), 100, 5000, rng);
  const auto base = newton_maximize(McLogLik(t, atoms), Eigen::Vector2d(-1, 0.75), NewtonConfig::exact());
  atoms.scale(7.3);
  const auto scaled = newton_maximize(McLogLik(t, atoms), Eigen::Vector2d(-1, 0.75), NewtonConfig::exact());
  CHECK(base.converged);
  CHECK((base.theta_hat - scaled.theta_hat).norm() < 1e-10);
  CHECK(scaled.loglik_at_hat == doctest::Approx(base.loglik_at_hat - 7.3).epsilon(1e-10));
}

TEST_CASE("benchmark with no interaction satisfies the weighted-moment equation") {
  const Eigen::Vector2d psi(0.3, 0.0);
  const BinaryLattice y = simulate(5, psi, 20, 12);
  const Vector t = suff_stat(y).vector();
  RngStream rng(3);
  const auto atoms = benchmark_estimate(AutologisticModel{5}, psi, 10, 4000, rng);
  // exp(-psi't) weights make the chain states equally weighted at psi
  CHECK(std::abs(atoms_eval(atoms, psi).log_value) < 1e-9);
  RngStream rng2(3);
  const auto fit = benchmark_mcml(AutologisticModel{5}, t, psi, 10, 4000, NewtonConfig::exact(), rng2);
  REQUIRE(fit.converged);
  CHECK((atoms_eval(atoms, fit.theta_hat).mean - t).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("benchmark MCML: long chain near the exact MLE, reproducible") {
  const BinaryLattice y = simulate(3, Eigen::Vector2d(-1, 0.75), 100, 31);
  const Vector t = suff_stat(y).vector();
  REQUIRE_FALSE(on_statistic_boundary(AutologisticModel{3}, t));
  const auto exact = exact_mle(AutologisticModel{3}, t, NewtonConfig::exact());
  RngStream r1(9), r2(9);
  const auto a = benchmark_mcml(AutologisticModel{3}, t, exact.theta_hat, 1000, 100000, NewtonConfig{}, r1);
  const auto b = benchmark_mcml(AutologisticModel{3}, t, exact.theta_hat, 1000, 100000, NewtonConfig{}, r2);
  CHECK(a.converged);
  CHECK((a.theta_hat - exact.theta_hat).lpNorm<Eigen::Infinity>() <= 0.05);
  CHECK(a.theta_hat == b.theta_hat);
  CHECK(a.loglik_at_hat == b.loglik_at_hat);
  CHECK(a.iterations == b.iterations);
  CHECK_THROWS_AS(benchmark_mcml(AutologisticModel{3}, t, exact.theta_hat, 0, 0, NewtonConfig{}, r1), ConfigError);
}

TEST_CASE("adaptive MCML with m = 1 and frozen psi maximizes one increment") {
  const BinaryLattice y = simulate(3, Eigen::Vector2d(-1, 0.75), 100, 31);
  const Vector t = suff_stat(y).vector();
  const Eigen::Vector2d psi(-0.8, 0.5);
  const IsremcConfig cfg{100, 2, 10, 40};
  RngStream r1(44), r2(44);
  AdaptiveOptions frozen;
  frozen.freeze_psi = true;
  const auto adaptive = adap_mcml(AutologisticModel{3}, t, y, psi, 1, cfg, PsiBox::unbounded(2),
                                  NewtonConfig::exact(), r1, frozen);
  auto inc = isremc_increment(AutologisticModel{3}, psi, cfg, GibbsKernel(psi), PseudoLikelihoodDensity(psi, y), r2);
  inc.compact();
  const auto direct = newton_maximize(McLogLik(t, inc), psi, NewtonConfig::exact());
  CHECK((adaptive.theta_hat - direct.theta_hat).norm() <= 1e-12);
  CHECK(adaptive.trajectory.front().theta == psi);
}

TEST_CASE("adaptive MCML on d = 3 approaches the exact MLE from zero") {
  const BinaryLattice y = simulate(3, Eigen::Vector2d(-1, 0.75), 100, 31);
  const Vector t = suff_stat(y).vector();
  const auto exact = exact_mle(AutologisticModel{3}, t, NewtonConfig::exact());
  RngStream rng(66);
  const auto fit = adap_mcml(AutologisticModel{3}, t, y, Eigen::Vector2d(0, 0), 20, IsremcConfig{500, 1, 50, 450},
                             PsiBox::uniform(2, -10, 10), NewtonConfig{}, rng);
  CHECK(fit.converged);
  CHECK((fit.theta_hat - exact.theta_hat).lpNorm<Eigen::Infinity>() <= 0.05);
  CHECK(fit.trajectory.size() >= 20);
  // psi path followed by final Newton iterates, all monotone within the final solve
  for (std::size_t i = 21; i < fit.trajectory.size(); ++i)
    CHECK(fit.trajectory[i].value >= fit.trajectory[i - 1].value - 1e-9);
}

TEST_CASE("psi clamping is recorded") {
  const BinaryLattice y = simulate(3, Eigen::Vector2d(-1, 0.75), 100, 31);
  const Vector t = suff_stat(y).vector();
  RngStream rng(2);
  const auto fit = adap_mcml(AutologisticModel{3}, t, y, Eigen::Vector2d(0, 0), 5, IsremcConfig{50, 1, 5, 20},
                             PsiBox::uniform(2, -0.1, 0.1), NewtonConfig{}, rng);
  CHECK(fit.clamp_events > 0);
  for (int i = 0; i < 5; ++i) CHECK(fit.trajectory[std::size_t(i)].theta.lpNorm<Eigen::Infinity>() <= 0.1);
  CHECK_THROWS_AS(adap_mcml(AutologisticModel{3}, t, y, Eigen::Vector2d(0, 0), 0, IsremcConfig{}, PsiBox::uniform(2, -1, 1),
                            NewtonConfig{}, rng),
                  ConfigError);
}

TEST_CASE("binomial adaptive MCML: error shrinks with iterations") {
  const int n = 20, y_obs = 14;
  const double mle = std::log(14.0 / 6.0);
  std::vector<double> e25, e400;
  for (int rep = 0; rep < 200; ++rep) {
    RngStream a(RngStream::derive_seed(3, rep)), b(RngStream::derive_seed(4, rep));
    const IsremcConfig cfg{10, 1, 0, 1};
    const auto f25 = adap_mcml(BinomialModel{n}, y_obs, 0.0, 25, cfg, PsiBox::uniform(1, -10, 10), NewtonConfig{}, a);
    const auto f400 = adap_mcml(BinomialModel{n}, y_obs, 0.0, 400, cfg, PsiBox::uniform(1, -10, 10), NewtonConfig{}, b);
    e25.push_back(std::abs(f25.theta_hat[0] - mle));
    e400.push_back(std::abs(f400.theta_hat[0] - mle));
  }
  CHECK(median(e400) < median(e25));
  CHECK(median(e400) < 0.05);
}

TEST_CASE("maximum pseudo-likelihood") {
  SUBCASE("fair coin lattice gives a parameter near zero") {
    RngStream rng(10);
    BinaryLattice y(64);
    for (int i = 0; i < y.size(); ++i) y.set(i, rng.bernoulli(0.5));
    const auto fit = mpl_estimate(y, NewtonConfig::exact());
    CHECK(fit.converged);
    CHECK(fit.theta_hat.lpNorm<Eigen::Infinity>() < 0.15);
  }
  SUBCASE("constant lattices are separated") {
    for (bool v : {false, true}) {
      const auto fit = mpl_estimate(BinaryLattice::filled(5, v), NewtonConfig::exact());
      CHECK_FALSE(fit.converged);
      CHECK(fit.diagnostic.find("separat") != std::string::npos);
    }
  }
  SUBCASE("grid-search oracle on a crafted d = 4 lattice") {
    const BinaryLattice y(4, {1, 1, 0, 0,
                              1, 0, 0, 1,
                              0, 0, 1, 1,
                              1, 0, 1, 0});
    const auto fit = mpl_estimate(y, NewtonConfig::exact());
    REQUIRE(fit.converged);
    // independent pseudo-likelihood: sum over sites of Bernoulli log-pmf
    auto pl = [&](double a, double b) {
      double s = 0;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          int k = 0;
          if (r > 0) k += y(r - 1, c);
          if (r < 3) k += y(r + 1, c);
          if (c > 0) k += y(r, c - 1);
          if (c < 3) k += y(r, c + 1);
          const double eta = a + b * k;
          s += y(r, c) * eta - std::log1p(std::exp(eta));
        }
      }
      return s;
    };
    double best = -1e300, ba = 0, bb = 0;
    const double step = 0.005;
    for (double a = -3; a <= 3; a += step) {
      for (double b = -3; b <= 3; b += step) {
        const double v = pl(a, b);
        if (v > best) {
          best = v;
          ba = a;
          bb = b;
        }
      }
    }
    CHECK(std::abs(fit.theta_hat[0] - ba) <= step);
    CHECK(std::abs(fit.theta_hat[1] - bb) <= step);
    CHECK(fit.loglik_at_hat >= best - 1e-12);
  }
}
