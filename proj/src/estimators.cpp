#include "mcml/estimators.hpp"

namespace mcml {

void IsremcConfig::validate() const {
  if (l < 1 || r < 1 || s < 0 || n < 1)
    throw ConfigError("resampling config needs l >= 1, r >= 1, s >= 0, n >= 1");
}

PsiBox PsiBox::uniform(int dim, double lo, double hi) {
  PsiBox box{Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
  box.validate();
  return box;
}

PsiBox PsiBox::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(dim, -inf), Vector::Constant(dim, inf)};
}

void PsiBox::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw ConfigError("psi box bounds must have equal, positive dimension");
  if (!(lower.array() < upper.array()).all())
    throw ConfigError("psi box needs lower < upper componentwise");
}

Theta PsiBox::clamp(const Theta& psi, bool* clamped) const {
  const Theta out = psi.cwiseMax(lower).cwiseMin(upper);
  if (clamped) *clamped = (out.array() != psi.array()).any();
  return out;
}

}  // namespace mcml
