#include "mavnmpc/box.hpp"

#include <limits>
#include <stdexcept>

namespace mavnmpc {

BoxSet BoxSet::unbounded(Eigen::Index n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

bool BoxSet::contains(const Eigen::VectorXd& u) const {
  return u.size() == size() && (u.array() >= lower.array()).all() && (u.array() <= upper.array()).all();
}

void BoxSet::validate() const {
  if (lower.size() != upper.size()) throw std::invalid_argument("box bound sizes differ");
  if (!(lower.array() <= upper.array()).all()) throw std::invalid_argument("box needs lower <= upper");
}

Eigen::VectorXd project(const Eigen::VectorXd& v, const BoxSet& box) {
  return v.cwiseMax(box.lower).cwiseMin(box.upper);
}

void projectInPlace(Eigen::VectorXd& v, const BoxSet& box) {
  v = v.cwiseMax(box.lower).cwiseMin(box.upper);
}

double squaredDistance(const Eigen::VectorXd& v, const BoxSet& box) {
  return (v - project(v, box)).squaredNorm();
}

}  // namespace mavnmpc
