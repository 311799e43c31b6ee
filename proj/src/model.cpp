#include "mcml/model.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace mcml {

void require_finite(const Theta& theta, const char* what) {
  if (theta.size() == 0 || !theta.allFinite())
    throw ConfigError(std::string(what) + " must be a non-empty vector of finite values");
}

BinaryLattice::BinaryLattice(int side) : side_(side) {
  if (side < 1) throw ConfigError("lattice side must be >= 1");
  sites_.assign(std::size_t(side) * side, 0);
}

BinaryLattice::BinaryLattice(int side, std::vector<std::uint8_t> sites)
    : side_(side), sites_(std::move(sites)) {
  if (side < 1) throw ConfigError("lattice side must be >= 1");
  if (sites_.size() != std::size_t(side) * side)
    throw ConfigError("lattice site count does not match side^2");
  for (auto s : sites_)
    if (s > 1) throw ConfigError("lattice sites must be 0 or 1");
}

BinaryLattice BinaryLattice::filled(int side, bool value) {
  BinaryLattice y(side);
  std::fill(y.sites_.begin(), y.sites_.end(), value ? 1 : 0);
  return y;
}

int BinaryLattice::neighbor_sum(int row, int col) const {
  int sum = 0;
  if (row > 0) sum += (*this)(row - 1, col);
  if (row + 1 < side_) sum += (*this)(row + 1, col);
  if (col > 0) sum += (*this)(row, col - 1);
  if (col + 1 < side_) sum += (*this)(row, col + 1);
  return sum;
}

std::uint64_t BinaryLattice::row_bits(int row) const {
  std::uint64_t bits = 0;
  for (int c = 0; c < side_; ++c)
    if ((*this)(row, c)) bits |= std::uint64_t{1} << c;
  return bits;
}

BinaryLattice BinaryLattice::transposed() const {
  BinaryLattice out(side_);
  for (int r = 0; r < side_; ++r)
    for (int c = 0; c < side_; ++c) out.set(c, r, (*this)(r, c));
  return out;
}

BinaryLattice BinaryLattice::rotated() const {
  BinaryLattice out(side_);
  for (int r = 0; r < side_; ++r)
    for (int c = 0; c < side_; ++c) out.set(c, side_ - 1 - r, (*this)(r, c));
  return out;
}

SuffStat suff_stat(const BinaryLattice& y) {
  SuffStat t;
  const int d = y.side();
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      if (!y(r, c)) continue;
      ++t.ones;
      if (c + 1 < d && y(r, c + 1)) ++t.pairs;
      if (r + 1 < d && y(r + 1, c)) ++t.pairs;
    }
  }
  return t;
}

void AutologisticModel::validate() const {
  if (side < 1) throw ConfigError("autologistic side d must be >= 1");
}

void BinomialModel::validate() const {
  if (trials < 1) throw ConfigError("binomial n must be >= 1");
}

int model_dim(const ModelSpec& model) {
  return std::visit([](const auto& m) { return m.dim(); }, model);
}

std::string describe(const ModelSpec& model) {
  std::ostringstream os;
  if (auto* a = std::get_if<AutologisticModel>(&model))
    os << "autologistic(d=" << a->side << ")";
  else
    os << "binomial(n=" << std::get<BinomialModel>(model).trials << ")";
  return os.str();
}

double log_unnorm_density(const ModelSpec& model, const Theta& theta, const Outcome& y) {
  if (auto* a = std::get_if<AutologisticModel>(&model)) {
    auto* lattice = std::get_if<BinaryLattice>(&y);
    if (!lattice || lattice->side() != a->side)
      throw ConfigError("outcome is not a lattice of the model's side");
    return log_unnorm_density(*a, theta, *lattice);
  }
  const auto& b = std::get<BinomialModel>(model);
  auto* count = std::get_if<int>(&y);
  if (!count || *count < 0 || *count > b.trials)
    throw ConfigError("binomial outcome must be in {0..n}");
  return log_unnorm_density(b, theta, *count);
}

namespace {

void check_theta(const Theta& theta, int dim) {
  require_finite(theta);
  if (theta.size() != dim) throw ConfigError("theta dimension does not match the model");
}

// Weighted moment accumulator for a mixture of (log weight, mean, raw second
// moment) components, shifted by the running maximum log weight.
struct Mixture {
  double shift = -std::numeric_limits<double>::infinity();
  double w = 0, m0 = 0, m1 = 0, s00 = 0, s01 = 0, s11 = 0;
};

}  // namespace

ExactMoments exact_moments(const AutologisticModel& model, const Theta& theta, int cap) {
  model.validate();
  check_theta(theta, 2);
  const int d = model.side;
  if (d > cap || d > 20) {
    std::ostringstream os;
    os << "exact normalizing constant infeasible for d=" << d << " (cap " << cap << ")";
    throw InfeasibleExactError(os.str());
  }
  const double a0 = theta[0], a1 = theta[1];
  const std::size_t states = std::size_t{1} << d;

  std::vector<int> ones(states), horiz(states);
  for (std::size_t s = 0; s < states; ++s) {
    ones[s] = std::popcount(s);
    horiz[s] = std::popcount(s & (s >> 1));
  }

  // Per row state: log partial sum, conditional mean and raw second moment of t.
  std::vector<double> lw(states), m0(states), m1(states), s00(states), s01(states), s11(states);
  for (std::size_t s = 0; s < states; ++s) {
    const double p = ones[s], h = horiz[s];
    lw[s] = a0 * p + a1 * h;
    m0[s] = p;
    m1[s] = h;
    s00[s] = p * p;
    s01[s] = p * h;
    s11[s] = h * h;
  }

  std::vector<double> nlw(states), nm0(states), nm1(states), ns00(states), ns01(states),
      ns11(states);
  std::vector<double> x(states);
  for (int row = 1; row < d; ++row) {
    for (std::size_t b = 0; b < states; ++b) {
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < states; ++a) {
        x[a] = lw[a] + a1 * std::popcount(a & b);
        shift = std::max(shift, x[a]);
      }
      double w = 0, wm0 = 0, wm1 = 0, ws00 = 0, ws01 = 0, ws11 = 0;
      double wv = 0, wvv = 0, wvm0 = 0, wvm1 = 0;
      for (std::size_t a = 0; a < states; ++a) {
        const double wa = std::exp(x[a] - shift);
        const double v = std::popcount(a & b);
        w += wa;
        wm0 += wa * m0[a];
        wm1 += wa * m1[a];
        ws00 += wa * s00[a];
        ws01 += wa * s01[a];
        ws11 += wa * s11[a];
        wv += wa * v;
        wvv += wa * v * v;
        wvm0 += wa * v * m0[a];
        wvm1 += wa * v * m1[a];
      }
      // Increment delta = (p, h + v) with v the vertical pairs to the previous row.
      const double p = ones[b], h = horiz[b];
      const double sum_d0 = w * p, sum_d1 = w * h + wv;
      nm0[b] = (wm0 + sum_d0) / w;
      nm1[b] = (wm1 + sum_d1) / w;
      ns00[b] = (ws00 + 2 * p * wm0 + w * p * p) / w;
      ns01[b] = (ws01 + p * wm1 + h * wm0 + wvm0 + p * (w * h + wv)) / w;
      ns11[b] = (ws11 + 2 * (h * wm1 + wvm1) + w * h * h + 2 * h * wv + wvv) / w;
      nlw[b] = shift + std::log(w) + a0 * p + a1 * h;
    }
    lw.swap(nlw);
    m0.swap(nm0);
    m1.swap(nm1);
    s00.swap(ns00);
    s01.swap(ns01);
    s11.swap(ns11);
  }

  double shift = -std::numeric_limits<double>::infinity();
  for (double v : lw) shift = std::max(shift, v);
  double w = 0, e0 = 0, e1 = 0, e00 = 0, e01 = 0, e11 = 0;
  for (std::size_t s = 0; s < states; ++s) {
    const double ws = std::exp(lw[s] - shift);
    w += ws;
    e0 += ws * m0[s];
    e1 += ws * m1[s];
    e00 += ws * s00[s];
    e01 += ws * s01[s];
    e11 += ws * s11[s];
  }
  ExactMoments out;
  out.log_norm = shift + std::log(w);
  out.mean = Eigen::Vector2d(e0 / w, e1 / w);
  out.cov.resize(2, 2);
  out.cov(0, 0) = e00 / w - out.mean[0] * out.mean[0];
  out.cov(0, 1) = out.cov(1, 0) = e01 / w - out.mean[0] * out.mean[1];
  out.cov(1, 1) = e11 / w - out.mean[1] * out.mean[1];
  if (!std::isfinite(out.log_norm) || !out.mean.allFinite())
    throw NumericalError("non-finite result in transfer-matrix recursion");
  return out;
}

ExactMoments exact_moments(const BinomialModel& model, const Theta& theta) {
  model.validate();
  check_theta(theta, 1);
  const double n = model.trials;
  const double p = logistic(theta[0]);
  ExactMoments out;
  out.log_norm = n * softplus(theta[0]);
  out.mean = Vector::Constant(1, n * p);
  out.cov = Matrix::Constant(1, 1, n * p * (1 - p));
  return out;
}

ExactMoments exact_moments(const ModelSpec& model, const Theta& theta, int cap) {
  if (auto* a = std::get_if<AutologisticModel>(&model)) return exact_moments(*a, theta, cap);
  return exact_moments(std::get<BinomialModel>(model), theta);
}

ExactMoments brute_force_moments(const AutologisticModel& model, const Theta& theta) {
  model.validate();
  check_theta(theta, 2);
  const std::size_t count = std::size_t{1} << (model.side * model.side);
  Vector logw(count);
  Matrix stats(2, count);
  std::size_t i = 0;
  for_each_lattice(model.side, [&](const BinaryLattice& y) {
    stats.col(i) = suff_stat(y).vector();
    logw[i] = theta.dot(stats.col(i));
    ++i;
  });
  ExactMoments out;
  out.log_norm = log_sum_exp(logw);
  const Vector p = exp_elementwise(logw.array() - out.log_norm).matrix();
  out.mean = stats * p;
  const Matrix centered = stats.colwise() - out.mean;
  out.cov = centered * p.asDiagonal() * centered.transpose();
  return out;
}

double exact_log_norm(const ModelSpec& model, const Theta& theta, int cap) {
  return exact_moments(model, theta, cap).log_norm;
}

Vector exact_mean_suffstat(const ModelSpec& model, const Theta& theta, int cap) {
  return exact_moments(model, theta, cap).mean;
}

}  // namespace mcml
