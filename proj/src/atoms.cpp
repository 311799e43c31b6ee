#include "mcml/atoms.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mcml {

void NormEstimateAtoms::add(double log_weight, const Vector& t) {
  if (t.size() != dim_) throw ConfigError("atom statistic has the wrong dimension");
  if (std::isnan(log_weight) || log_weight == std::numeric_limits<double>::infinity())
    throw NumericalError("atom weight is not a finite positive number");
  log_weights_.push_back(log_weight);
  stats_.insert(stats_.end(), t.data(), t.data() + dim_);
}

void NormEstimateAtoms::scale(double log_factor) {
  for (double& w : log_weights_) w += log_factor;
}

void NormEstimateAtoms::append(const NormEstimateAtoms& other, double log_factor) {
  if (other.dim_ != dim_) throw ConfigError("cannot append atoms of a different dimension");
  log_weights_.reserve(log_weights_.size() + other.log_weights_.size());
  for (double w : other.log_weights_) log_weights_.push_back(w + log_factor);
  stats_.insert(stats_.end(), other.stats_.begin(), other.stats_.end());
}

void NormEstimateAtoms::compact() {
  const std::size_t n = log_weights_.size();
  if (n < 2) return;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto stat = [&](std::size_t i) { return stats_.begin() + std::ptrdiff_t(i * dim_); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(stat(a), stat(a) + dim_, stat(b), stat(b) + dim_);
  });
  std::vector<double> weights, stats;
  for (std::size_t i : order) {
    if (!weights.empty() && std::equal(stat(i), stat(i) + dim_, stats.end() - dim_)) {
      weights.back() = log_add_exp(weights.back(), log_weights_[i]);
    } else {
      weights.push_back(log_weights_[i]);
      stats.insert(stats.end(), stat(i), stat(i) + dim_);
    }
  }
  log_weights_.swap(weights);
  stats_.swap(stats);
}

double AtomsEval::value() const {
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    std::ostringstream os;
    os << "normalizing-constant estimate overflows: log value " << log_value
       << ", theta't in [" << min_exponent << ", " << max_exponent << "]";
    throw NumericalError(os.str());
  }
  return std::exp(log_value);
}

AtomsEval atoms_eval(const NormEstimateAtoms& est, const Theta& theta) {
  if (est.empty()) throw ConfigError("cannot evaluate an empty normalizing-constant estimate");
  if (theta.size() != est.dim()) throw ConfigError("theta dimension does not match the atoms");
  const auto stats = est.stats();
  const Vector exponents = stats.transpose() * theta;
  AtomsEval out;
  out.min_exponent = exponents.minCoeff();
  out.max_exponent = exponents.maxCoeff();
  if (!exponents.allFinite()) {
    std::ostringstream os;
    os << "theta't not finite at theta = " << theta.transpose();
    throw NumericalError(os.str());
  }
  const Vector e = exponents + est.log_weights();
  const double shift = e.maxCoeff();
  const Vector p = exp_elementwise(e.array() - shift).matrix();
  const double total = p.sum();
  out.log_value = shift + std::log(total);
  out.mean = stats * p / total;
  const Matrix centered = stats.colwise() - out.mean;
  out.cov = centered * (p / total).asDiagonal() * centered.transpose();
  return out;
}

NormEstimateAtoms merge_running(const NormEstimateAtoms& est, const NormEstimateAtoms& increment,
                                long m) {
  if (m < 1) throw ConfigError("running-average index m must be >= 1");
  if (m == 1) {
    NormEstimateAtoms out = increment;
    out.set_iterations(1);
    return out;
  }
  NormEstimateAtoms out = est;
  out.scale(std::log(double(m - 1) / double(m)));
  out.append(increment, -std::log(double(m)));
  out.set_iterations(m);
  return out;
}

}  // namespace mcml
