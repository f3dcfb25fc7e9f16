#pragma once

#include <Eigen/Dense>

namespace mavnmpc {

/// Componentwise bounds lower <= u <= upper; entries may be infinite.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoxSet unbounded(Eigen::Index n);
  Eigen::Index size() const { return lower.size(); }
  bool contains(const Eigen::VectorXd& u) const;
  /// Throws std::invalid_argument on size mismatch or lower > upper.
  void validate() const;
};

/// Euclidean projection onto the box (componentwise clamp).
Eigen::VectorXd project(const Eigen::VectorXd& v, const BoxSet& box);
void projectInPlace(Eigen::VectorXd& v, const BoxSet& box);

/// Squared distance from v to the box.
double squaredDistance(const Eigen::VectorXd& v, const BoxSet& box);

}  // namespace mavnmpc
