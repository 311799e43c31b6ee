#pragma once

#include "mcml/error.hpp"
#include "mcml/numeric.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mcml {

/// Natural parameter of an exponential family, f_theta(y) = exp(theta' t(y)).
/// Also used for the instrumental parameter psi, which lives in the same space.
using Theta = Eigen::VectorXd;

/// Throws ConfigError unless every component is finite.
void require_finite(const Theta& theta, const char* what = "theta");

/// d x d field of {0,1} sites, row-major.
class BinaryLattice {
 public:
  explicit BinaryLattice(int side);
  BinaryLattice(int side, std::vector<std::uint8_t> sites);

  static BinaryLattice filled(int side, bool value);

  int side() const { return side_; }
  int size() const { return side_ * side_; }

  std::uint8_t operator()(int row, int col) const { return sites_[row * side_ + col]; }
  std::uint8_t operator[](int index) const { return sites_[index]; }
  void set(int row, int col, bool value) { sites_[row * side_ + col] = value ? 1 : 0; }
  void set(int index, bool value) { sites_[index] = value ? 1 : 0; }

  /// Number of occupied 4-neighbours of (row, col), free boundary.
  int neighbor_sum(int row, int col) const;

  /// Row as a bit mask, column c in bit c. Requires side <= 63.
  std::uint64_t row_bits(int row) const;

  BinaryLattice transposed() const;
  /// Clockwise quarter turn.
  BinaryLattice rotated() const;

  const std::vector<std::uint8_t>& sites() const { return sites_; }

  friend bool operator==(const BinaryLattice&, const BinaryLattice&) = default;

 private:
  int side_;
  std::vector<std::uint8_t> sites_;
};

/// Autologistic sufficient statistic: occupied sites and occupied
/// 4-neighbour pairs (each unordered pair counted once).
struct SuffStat {
  long ones = 0;
  long pairs = 0;

  Vector vector() const { return Eigen::Vector2d(double(ones), double(pairs)); }
  friend bool operator==(const SuffStat&, const SuffStat&) = default;
};

SuffStat suff_stat(const BinaryLattice& y);

/// Autologistic model on {0,1}^{d x d}, free-boundary 4-neighbourhood,
/// counting base measure. theta = (singleton, pairwise).
struct AutologisticModel {
  using outcome_type = BinaryLattice;

  int side = 1;

  int dim() const { return 2; }
  long max_pairs() const { return 2L * side * (side - 1); }
  Vector statistic(const BinaryLattice& y) const { return suff_stat(y).vector(); }
  double log_base_measure(const BinaryLattice&) const { return 0.0; }
  void validate() const;
};

/// Binomial(n) in log-odds form, f_theta(y) = exp(theta y) with the
/// C(n, y) factor carried by the base measure.
struct BinomialModel {
  using outcome_type = int;

  int trials = 1;

  int dim() const { return 1; }
  Vector statistic(int y) const { return Vector::Constant(1, double(y)); }
  double log_base_measure(int y) const { return log_binomial_coefficient(trials, y); }
  void validate() const;
};

using ModelSpec = std::variant<AutologisticModel, BinomialModel>;
using Outcome = std::variant<BinaryLattice, int>;

int model_dim(const ModelSpec& model);
std::string describe(const ModelSpec& model);

/// theta' t(y). The binomial coefficient is not included.
template <typename Model>
double log_unnorm_density(const Model& model, const Theta& theta,
                          const typename Model::outcome_type& y) {
  if (theta.size() != model.dim())
    throw ConfigError("theta dimension does not match the model");
  return theta.dot(model.statistic(y));
}

double log_unnorm_density(const ModelSpec& model, const Theta& theta, const Outcome& y);

/// log c(theta), E t(Y) and Cov t(Y) under pi_theta.
struct ExactMoments {
  double log_norm = 0.0;
  Vector mean;
  Matrix cov;
};

inline constexpr int kDefaultExactCap = 12;
inline constexpr int kBruteForceCap = 4;

/// Transfer-matrix recursion over rows (2^d row states). Throws
/// InfeasibleExactError above `cap`.
ExactMoments exact_moments(const AutologisticModel& model, const Theta& theta,
                           int cap = kDefaultExactCap);
ExactMoments exact_moments(const BinomialModel& model, const Theta& theta);
ExactMoments exact_moments(const ModelSpec& model, const Theta& theta,
                           int cap = kDefaultExactCap);

/// Enumeration of all 2^{d^2} configurations; d <= 4.
ExactMoments brute_force_moments(const AutologisticModel& model, const Theta& theta);

double exact_log_norm(const ModelSpec& model, const Theta& theta, int cap = kDefaultExactCap);
Vector exact_mean_suffstat(const ModelSpec& model, const Theta& theta,
                           int cap = kDefaultExactCap);

/// Calls fn(lattice) for every configuration of a d <= 4 lattice.
template <typename Fn>
void for_each_lattice(int side, Fn&& fn) {
  if (side > kBruteForceCap)
    throw InfeasibleExactError("brute-force enumeration limited to d <= 4");
  const int n = side * side;
  BinaryLattice y(side);
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    for (int i = 0; i < n; ++i) y.set(i, (code >> i) & 1U);
    fn(static_cast<const BinaryLattice&>(y));
  }
}

}  // namespace mcml
