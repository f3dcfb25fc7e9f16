#pragma once

#include <Eigen/Dense>

#include <optional>
#include <variant>
#include <vector>

namespace mavnmpc {

// Shape primitives. Each contributes one or more scalar constraint functions h
// with the convention that a point is inside the primitive iff every h > 0.

/// h(p) = offset - normal . p
struct Halfspace {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

/// h(p, t) = 1 - (p - c(t))^T M (p - c(t)), with c(t) = center + t * center_velocity.
/// A singular M describes an elliptic cylinder.
struct Ellipsoid {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d center_velocity = Eigen::Vector3d::Zero();
  Eigen::Matrix3d shape = Eigen::Matrix3d::Identity();
};

/// Infinite circular cylinder along a coordinate axis:
/// h(p) = radius^2 - sum over the two other axes of (p_i - c_i)^2.
struct Cylinder {
  int axis = 2;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // remaining axes, increasing index order
  double radius = 1.0;
};

/// lower < p_axis < upper as the two affine functions p_axis - lower and upper - p_axis.
/// A fixed face is left untouched by `enlarge` (e.g. a floor the obstacle stands on).
struct AxisSlab {
  int axis = 2;
  double lower = 0.0;
  double upper = 1.0;
  bool lower_fixed = false;
  bool upper_fixed = false;
};

using ConstraintFn = std::variant<Halfspace, Ellipsoid, Cylinder, AxisSlab>;

/// Enlarged obstacle set {p : h^i(p, t) > 0 for all i} with its penalty weights.
struct ObstacleSpec {
  std::vector<ConstraintFn> constraints;
  double weight = 1.0;
  double terminal_weight = 1.0;

  void validate() const;
};

/// Points on the vehicle body, each enclosed by a ball of `ball_radius`. Offsets are
/// expressed in the yaw-compensated world frame, so c_i(p) = p + offsets[i].
struct CornerPointSet {
  std::vector<Eigen::Vector3d> offsets{Eigen::Vector3d::Zero()};
  double ball_radius = 0.24;
  double margin = 0.06;

  void validate() const;
  Eigen::Vector3d corner(std::size_t i, const Eigen::Vector3d& p) const { return p + offsets[i]; }
  double enlargement() const { return ball_radius + margin; }
};

/// Number of scalar constraint functions (slabs count twice).
std::size_t termCount(const ObstacleSpec& obstacle);

/// Evaluates every scalar h^i and its gradient, in declaration order.
void evaluateTerms(const ObstacleSpec& obstacle, const Eigen::Vector3d& p, double t,
                   std::vector<double>& values, std::vector<Eigen::Vector3d>& gradients);

bool contains(const ObstacleSpec& obstacle, const Eigen::Vector3d& p, double t = 0.0);

/// psi = 1/2 prod_i max(h^i, 0)^2.
double psi(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t = 0.0);
Eigen::Vector3d gradPsi(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t = 0.0);
/// psi and its gradient in a single pass.
double psiWithGradient(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t,
                       Eigen::Vector3d& gradient);

/// Inflates every primitive by `radius` along its outward normal. Exact for
/// halfspaces, cylinders, slabs and spheres; a general ellipsoid is scaled about its
/// center until it contains the Minkowski sum. Throws std::invalid_argument if radius < 0.
ObstacleSpec enlarge(const ObstacleSpec& obstacle, double radius);

/// Distance from an interior point to the boundary of the set (0 outside). Exact for
/// intersections of halfspaces, slabs, cylinders and spheres; first-order for ellipsoids.
double penetrationDepth(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t = 0.0);

/// Distance from p to the axis of the first Cylinder primitive, if there is one.
std::optional<double> axisDistance(const Eigen::Vector3d& p, const ObstacleSpec& obstacle);

}  // namespace mavnmpc
