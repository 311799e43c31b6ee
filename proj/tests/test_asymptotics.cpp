#include "doctest.h"
#include "oracles.hpp"

#include "mcml/asymptotics.hpp"

#include <random>

using namespace mcml;

namespace {

Vector random_log_pmf(std::mt19937& gen, int size) {
  std::uniform_real_distribution<double> u(0.05, 1.05);
  Vector m(size);
  for (int i = 0; i < size; ++i) m[i] = u(gen);
  return (m / m.sum()).array().log().matrix();
}

}  // namespace

TEST_CASE("enumerated spaces") {
  const auto b = enumerate_space(BinomialModel{4});
  CHECK(b.size() == 5);
  CHECK(b.dim() == 1);
  CHECK(b.log_base[2] == doctest::Approx(std::log(6.0)));
  const auto a = enumerate_space(AutologisticModel{2});
  CHECK(a.size() == 16);
  CHECK(a.stats.col(15) == Eigen::Vector2d(4, 4));
  CHECK_THROWS_AS(enumerate_space(AutologisticModel{5}), InfeasibleExactError);
  const Vector q = target_log_masses(a, Eigen::Vector2d(-1, 0.75));
  CHECK(log_sum_exp(q) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("sandwich at h = pi_theta* is the inverse Fisher information") {
  for (int n : {2, 10, 20}) {
    const BinomialModel model{n};
    const Theta ts = Vector::Constant(1, 0.3);
    const auto s = exact_sandwich(model, ts, BinomialPmf::exponential_family(n, 0.3));
    const double p = 1 / (1 + std::exp(-0.3));
    CHECK(s.D(0, 0) == doctest::Approx(-n * p * (1 - p)).epsilon(1e-12));
    CHECK(std::abs(s.V(0, 0) + s.D(0, 0)) <= 1e-9);
    CHECK(s.sigma(0, 0) == doctest::Approx(1 / (n * p * (1 - p))).epsilon(1e-9));
  }
  const auto space = enumerate_space(AutologisticModel{2});
  const Eigen::Vector2d ts(-1, 0.75);
  const auto s = exact_sandwich(space, ts, target_log_masses(space, ts));
  CHECK((s.V + s.D).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK((s.sigma + s.D.inverse()).lpNorm<Eigen::Infinity>() <= 1e-9);
  const auto ref = oracle::enumerate(2, -1, 0.75);
  CHECK((s.D + Matrix(ref.cov())).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(s.trace_sigma == doctest::Approx(s.sigma.trace()));
}

TEST_CASE("binomial n = 2 uniform sandwich by three-term summation") {
  const auto s = exact_sandwich(BinomialModel{2}, Vector::Zero(1), BinomialPmf::uniform(2));
  // q = (1/4, 1/2, 1/4), mean 1, h = 1/3
  const double V = 3 * (0.0625 + 0.0625);
  CHECK(s.D(0, 0) == doctest::Approx(-0.5));
  CHECK(s.V(0, 0) == doctest::Approx(V).epsilon(1e-12));
  CHECK(s.sigma(0, 0) == doctest::Approx(V / 0.25).epsilon(1e-12));
}

TEST_CASE("sandwich structure on the lattice space") {
  const auto space = enumerate_space(AutologisticModel{3});
  const Eigen::Vector2d ts(-0.8, 0.5);
  const PseudoLikelihoodDensity h(Eigen::Vector2d(-0.5, 0.3), oracle::lattice_of_code(3, 0b101010101));
  const auto s = exact_sandwich(space, ts, instrumental_log_masses(AutologisticModel{3}, h));
  CHECK((s.D - s.D.transpose()).norm() < 1e-12);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s.D).eigenvalues().maxCoeff() < 0);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s.V).eigenvalues().minCoeff() >= -1e-9);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s.sigma).eigenvalues().minCoeff() >= -1e-9);
  const Matrix Dinv = s.D.inverse();
  CHECK((s.sigma - Dinv * s.V * Dinv).lpNorm<Eigen::Infinity>() <= 1e-9 * s.sigma.norm());
}

TEST_CASE("score identity and zero-mean xi") {
  for (int n : {1, 5, 20}) {
    const auto space = enumerate_space(BinomialModel{n});
    const Theta ts = Vector::Constant(1, -0.4);
    CHECK(std::abs(eta_values(space, ts).sum()) <= 1e-10);
    const Vector log_h = BinomialPmf::uniform(n).log_masses();
    const Matrix xi = xi_values(space, ts, log_h);
    CHECK(std::abs((xi.row(0).array() * log_h.transpose().array().exp()).sum()) <= 1e-10);
  }
  for (int d : {2, 3}) {
    const auto space = enumerate_space(AutologisticModel{d});
    const Eigen::Vector2d ts(-1, 0.75);
    CHECK(eta_values(space, ts).rowwise().sum().lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("optimal instrumental density") {
  const BinomialPmf h = optimal_h(BinomialModel{2}, Vector::Zero(1));
  CHECK(h.probability(0) == doctest::Approx(0.5));
  CHECK(h.probability(1) == 0.0);
  CHECK(h.probability(2) == doctest::Approx(0.5));

  for (int y_obs : {1, 4, 7, 9}) {
    const int n = 10;
    const Theta ts = Vector::Constant(1, std::log(double(y_obs) / (n - y_obs)));
    const BinomialPmf got = optimal_h(BinomialModel{n}, ts);
    const BinomialPmf closed = BinomialPmf::optimal(n, y_obs, ts[0]);
    CHECK(got.probability(y_obs) == 0.0);
    for (int y = 0; y <= n; ++y) CHECK(got.probability(y) == doctest::Approx(closed.probability(y)).epsilon(1e-12));
  }

  // scaling a one-dimensional D leaves the normalized pmf unchanged
  const auto space = enumerate_space(BinomialModel{8});
  const Theta ts = Vector::Constant(1, 0.2);
  const Matrix eta = eta_values(space, ts);
  const double D = -exact_moments(BinomialModel{8}, ts).cov(0, 0);
  Vector a = (eta.row(0) / D).cwiseAbs().transpose(), b = (eta.row(0) / (3.7 * D)).cwiseAbs().transpose();
  a /= a.sum();
  b /= b.sum();
  CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-15);
  const Vector opt = exp_elementwise(optimal_log_masses(space, ts));
  CHECK((opt - a).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("h_opt attains the Schwarz bound and beats other densities") {
  const int n = 10;
  const auto space = enumerate_space(BinomialModel{n});
  std::mt19937 gen(77);
  for (int y_obs : {3, 7}) {
    const Theta ts = Vector::Constant(1, std::log(double(y_obs) / (n - y_obs)));
    const double best = exact_sandwich(space, ts, optimal_log_masses(space, ts)).trace_sigma;
    CHECK(std::abs(best - schwarz_bound(space, ts)) <= 1e-9);
    CHECK(best <= exact_sandwich(space, ts, BinomialPmf::uniform(n).log_masses()).trace_sigma);
    CHECK(best <= exact_sandwich(space, ts, target_log_masses(space, ts)).trace_sigma);
    for (int k = 0; k < 5; ++k) CHECK(best <= exact_sandwich(space, ts, random_log_pmf(gen, n + 1)).trace_sigma);
  }
  // two-dimensional: Schwarz bound still a lower bound on the lattice space
  const auto lat = enumerate_space(AutologisticModel{2});
  const Eigen::Vector2d th(-1, 0.75);
  const double bound = schwarz_bound(lat, th);
  const double at_opt = exact_sandwich(lat, th, optimal_log_masses(lat, th)).trace_sigma;
  CHECK(std::abs(at_opt - bound) <= 1e-9 * bound);
  for (int k = 0; k < 5; ++k) CHECK(bound <= exact_sandwich(lat, th, random_log_pmf(gen, 16)).trace_sigma + 1e-12);
}

TEST_CASE("infinite variance when h vanishes where eta does not") {
  const auto space = enumerate_space(BinomialModel{4});
  Vector log_h = BinomialPmf::uniform(4).log_masses();
  log_h[0] = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(exact_sandwich(space, Vector::Constant(1, 0.0), log_h), NumericalError);
  CHECK(std::isinf(xi_values(space, Vector::Constant(1, 0.0), log_h)(0, 0)));
  CHECK_THROWS_AS(exact_sandwich(space, Vector::Constant(1, 0.0), Vector::Zero(3)), ConfigError);
}

TEST_CASE("Lyapunov moment is finite") {
  const auto space = enumerate_space(AutologisticModel{2});
  const Eigen::Vector2d th(-1, 0.75);
  const PseudoLikelihoodDensity h(Eigen::Vector2d(-0.5, 0.2), oracle::lattice_of_code(2, 3));
  const double m = lyapunov_moment(space, th, instrumental_log_masses(AutologisticModel{2}, h), 1.0);
  CHECK(std::isfinite(m));
  CHECK(m > 0);
  const auto b = enumerate_space(BinomialModel{20});
  CHECK(std::isfinite(lyapunov_moment(b, Vector::Constant(1, 0.8), BinomialPmf::uniform(20).log_masses(), 1.0)));
}

TEST_CASE("Anderson-Darling") {
  RngStream rng(4);
  std::vector<double> normal, expo;
  for (int i = 0; i < 2000; ++i) {
    normal.push_back(3 + 2 * oracle::normal(rng));
    expo.push_back(-std::log(1 - rng.uniform()));
  }
  const auto ok = anderson_darling(normal, 0.01);
  CHECK(ok.passed);
  CHECK(ok.critical == doctest::Approx(1.035));
  const auto bad = anderson_darling(expo, 0.01);
  CHECK_FALSE(bad.passed);
  CHECK(bad.statistic > 10);
  CHECK(anderson_darling(normal, 0.05).critical == doctest::Approx(0.752));
  CHECK_THROWS_AS(anderson_darling(normal, 0.2), ConfigError);
  CHECK_THROWS_AS(anderson_darling({1, 2, 3}, 0.05), ConfigError);
}

TEST_CASE("CLT check with h = pi_theta* targets the inverse Fisher information") {
  CltSettings s;
  s.trials = 20;
  s.y_obs = 14;
  const BinomialPmf target = BinomialPmf::exponential_family(20, std::log(14.0 / 6.0));
  for (int y = 0; y <= 20; ++y) s.h_masses.push_back(target.probability(y));
  s.m = 2000;
  s.reps = 2000;
  s.seed = 5;
  const auto r = clt_validate(s);
  CHECK(r.valid);
  CHECK(r.target_sigma == doctest::Approx(1 / (20 * 0.7 * 0.3)).epsilon(1e-9));
  CHECK(r.rel_error <= 0.15);
  CHECK(r.normality.passed);
  CHECK(r.passed);
  CHECK(r.seeds.size() == 2000);
  CHECK(r.seeds[3] == RngStream::derive_seed(5, 3));
}

TEST_CASE("CLT check for adaptive IS with converging psi") {
  CltSettings s;
  s.kind = CltEstimator::AdaptiveIS;
  s.m = 2048;
  s.reps = 2000;
  s.seed = 9;
  const auto r = clt_validate(s);
  CHECK(r.valid);
  CHECK(r.target_sigma == doctest::Approx(1 / (20 * 0.7 * 0.3)).epsilon(1e-9));
  CHECK(r.rel_error <= 0.15);
  CHECK(r.normality.passed);

  // psi_j -> psi* != theta*: the target is the sandwich at h = pi_psi*
  s.psi_star = 0.3;
  const auto off = clt_validate(s);
  const auto space = enumerate_space(BinomialModel{20});
  const double expect = exact_sandwich(space, Vector::Constant(1, std::log(14.0 / 6.0)),
                                       BinomialPmf::exponential_family(20, 0.3).log_masses())
                            .sigma(0, 0);
  CHECK(off.target_sigma == doctest::Approx(expect).epsilon(1e-12));
  CHECK(off.target_sigma > r.target_sigma);
  CHECK(off.rel_error <= 0.15);
}

TEST_CASE("CLT consistency band for ISReMC") {
  CltSettings s;
  s.kind = CltEstimator::Isremc;
  s.isremc = IsremcConfig{20, 1, 0, 2};
  s.m = 500;
  s.reps = 1000;
  s.rel_tol = 0.25;
  s.target_draws = 100000;
  s.seed = 3;
  const auto r = clt_validate(s);
  CHECK(r.valid);
  CHECK(r.rel_error <= 0.25);
  CHECK(r.normality.passed);
}

TEST_CASE("CLT configuration errors") {
  CltSettings s;
  s.y_obs = 0;
  CHECK_THROWS_AS(clt_validate(s), ConfigError);
  s = CltSettings{};
  s.reps = 3;
  CHECK_THROWS_AS(clt_validate(s), ConfigError);
  s = CltSettings{};
  s.h_masses = {1, 1, 1};
  CHECK_THROWS_AS(clt_validate(s), ConfigError);
}

TEST_CASE("SLLN checks") {
  SUBCASE("constant increments") {
    const Matrix inc = Matrix::Constant(20, 100, 3.5);
    const auto r = slln_validate(inc, 3.5, {10, 50, 100});
    for (double e : r.median_abs_error) CHECK(e == 0.0);
    CHECK(r.passed);
  }
  SUBCASE("iid increments") {
    RngStream rng(6);
    Matrix inc(200, 4096);
    for (Eigen::Index i = 0; i < inc.rows(); ++i)
      for (Eigen::Index j = 0; j < inc.cols(); ++j) inc(i, j) = 2 + oracle::normal(rng);
    const auto r = slln_validate(inc, 2.0, {16, 256, 4096});
    CHECK(r.decreasing);
    CHECK(r.within_band);
  }
  SUBCASE("ISReMC increments on d = 2") {
    const Eigen::Vector2d th(-1, 0.75), psi(-0.7, 0.6);
    const PseudoLikelihoodDensity h(psi, oracle::lattice_of_code(2, 0b0110));
    const GibbsKernel kernel(psi);
    RngStream rng(8);
    Matrix inc(100, 2000);
    for (Eigen::Index i = 0; i < inc.rows(); ++i)
      for (Eigen::Index j = 0; j < inc.cols(); ++j)
        inc(i, j) = atoms_eval(isremc_increment(AutologisticModel{2}, psi, IsremcConfig{10, 1, 2, 5}, kernel, h, rng), th).value();
    const double c = oracle::enumerate(2, -1, 0.75).c;
    const auto r = slln_validate(inc, c, {20, 200, 2000}, 3.0);
    CHECK(r.decreasing);
    CHECK(r.within_band);
  }
  CHECK_THROWS_AS(slln_validate(Matrix::Zero(2, 10), 0, {5, 3}), ConfigError);
  CHECK_THROWS_AS(slln_validate(Matrix::Zero(2, 10), 0, {11}), ConfigError);
}
