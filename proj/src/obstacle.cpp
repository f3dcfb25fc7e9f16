#include "mavnmpc/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mavnmpc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Indices of the two axes orthogonal to `axis`, in increasing order.
std::pair<int, int> otherAxes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

// Calls fn(h, grad_h) for every scalar function of the primitive.
template <class Fn>
void forEachTerm(const ConstraintFn& c, const Eigen::Vector3d& p, double t, Fn&& fn) {
  std::visit(Overloaded{
                 [&](const Halfspace& hs) { fn(hs.offset - hs.normal.dot(p), Eigen::Vector3d(-hs.normal)); },
                 [&](const Ellipsoid& e) {
                   const Eigen::Vector3d d = p - (e.center + t * e.center_velocity);
                   const Eigen::Vector3d md = e.shape * d;
                   fn(1.0 - d.dot(md), Eigen::Vector3d(-(md + e.shape.transpose() * d)));
                 },
                 [&](const Cylinder& cyl) {
                   const auto [a, b] = otherAxes(cyl.axis);
                   const double da = p[a] - cyl.center[0];
                   const double db = p[b] - cyl.center[1];
                   Eigen::Vector3d g = Eigen::Vector3d::Zero();
                   g[a] = -2.0 * da;
                   g[b] = -2.0 * db;
                   fn(cyl.radius * cyl.radius - da * da - db * db, g);
                 },
                 [&](const AxisSlab& s) {
                   const Eigen::Vector3d e = Eigen::Vector3d::Unit(s.axis);
                   fn(p[s.axis] - s.lower, e);
                   fn(s.upper - p[s.axis], Eigen::Vector3d(-e));
                 },
             },
             c);
}

void checkAxis(int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis index must be 0, 1 or 2");
}

}  // namespace

void ObstacleSpec::validate() const {
  if (constraints.empty()) throw std::invalid_argument("obstacle needs at least one constraint");
  if (!(weight > 0.0) || !(terminal_weight > 0.0)) {
    throw std::invalid_argument("obstacle weights must be positive");
  }
  for (const auto& c : constraints) {
    std::visit(Overloaded{
                   [](const Halfspace& hs) {
                     if (!hs.normal.allFinite() || hs.normal.norm() == 0.0) {
                       throw std::invalid_argument("halfspace normal must be finite and nonzero");
                     }
                   },
                   [](const Ellipsoid& e) {
                     const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(
                         0.5 * (e.shape + e.shape.transpose()));
                     if (eig.eigenvalues().minCoeff() < -1e-12) {
                       throw std::invalid_argument("ellipsoid shape matrix must be positive semidefinite");
                     }
                   },
                   [](const Cylinder& cyl) {
                     checkAxis(cyl.axis);
                     if (!(cyl.radius > 0.0)) throw std::invalid_argument("cylinder radius must be positive");
                   },
                   [](const AxisSlab& s) {
                     checkAxis(s.axis);
                     if (!(s.lower < s.upper)) throw std::invalid_argument("slab needs lower < upper");
                   },
               },
               c);
  }
}

void CornerPointSet::validate() const {
  if (offsets.empty()) throw std::invalid_argument("at least one corner point is required");
  if (!(ball_radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be non-negative");
}

std::size_t termCount(const ObstacleSpec& obstacle) {
  std::size_t n = 0;
  for (const auto& c : obstacle.constraints) n += std::holds_alternative<AxisSlab>(c) ? 2 : 1;
  return n;
}

void evaluateTerms(const ObstacleSpec& obstacle, const Eigen::Vector3d& p, double t,
                   std::vector<double>& values, std::vector<Eigen::Vector3d>& gradients) {
  values.clear();
  gradients.clear();
  for (const auto& c : obstacle.constraints) {
    forEachTerm(c, p, t, [&](double h, const Eigen::Vector3d& g) {
      values.push_back(h);
      gradients.push_back(g);
    });
  }
}

bool contains(const ObstacleSpec& obstacle, const Eigen::Vector3d& p, double t) {
  bool inside = true;
  for (const auto& c : obstacle.constraints) {
    forEachTerm(c, p, t, [&](double h, const Eigen::Vector3d&) { inside = inside && h > 0.0; });
    if (!inside) return false;
  }
  return true;
}

double psi(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t) {
  double prod = 1.0;
  for (const auto& c : obstacle.constraints) {
    forEachTerm(c, p, t, [&](double h, const Eigen::Vector3d&) {
      const double hp = std::max(h, 0.0);
      prod *= hp * hp;
    });
  }
  return 0.5 * prod;
}

double psiWithGradient(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t,
                       Eigen::Vector3d& gradient) {
  // Inside the set every h^i > 0, so h^i prod_{j!=i} (h^j)^2 = P / h^i with
  // P = prod_j (h^j)^2, and the gradient is P * sum_i grad h^i / h^i.
  double prod = 1.0;
  bool inside = true;
  Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
  for (const auto& c : obstacle.constraints) {
    forEachTerm(c, p, t, [&](double h, const Eigen::Vector3d& g) {
      if (h <= 0.0) {
        inside = false;
        return;
      }
      prod *= h * h;
      weighted += g / h;
    });
    if (!inside) break;
  }
  if (!inside) {
    gradient.setZero();
    return 0.0;
  }
  gradient = prod * weighted;
  return 0.5 * prod;
}

Eigen::Vector3d gradPsi(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t) {
  Eigen::Vector3d g;
  psiWithGradient(p, obstacle, t, g);
  return g;
}

ObstacleSpec enlarge(const ObstacleSpec& obstacle, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("enlargement radius must be non-negative");
  ObstacleSpec out = obstacle;
  if (radius == 0.0) return out;
  for (auto& c : out.constraints) {
    std::visit(Overloaded{
                   [&](Halfspace& hs) { hs.offset += radius * hs.normal.norm(); },
                   [&](Ellipsoid& e) {
                     const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(
                         0.5 * (e.shape + e.shape.transpose()));
                     const double largest = eig.eigenvalues().maxCoeff();
                     if (largest <= 0.0) return;
                     // B(r) is contained in (r / a_min) E, hence E + B(r) lies in (1 + r / a_min) E.
                     const double scale = 1.0 + radius * std::sqrt(largest);
                     e.shape /= scale * scale;
                   },
                   [&](Cylinder& cyl) { cyl.radius += radius; },
                   [&](AxisSlab& s) {
                     if (!s.lower_fixed) s.lower -= radius;
                     if (!s.upper_fixed) s.upper += radius;
                   },
               },
               c);
  }
  return out;
}

double penetrationDepth(const Eigen::Vector3d& p, const ObstacleSpec& obstacle, double t) {
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& c : obstacle.constraints) {
    std::visit(Overloaded{
                   [&](const Halfspace& hs) {
                     depth = std::min(depth, (hs.offset - hs.normal.dot(p)) / hs.normal.norm());
                   },
                   [&](const Ellipsoid&) {
                     forEachTerm(c, p, t, [&](double h, const Eigen::Vector3d& g) {
                       const double gn = g.norm();
                       depth = std::min(depth, gn > 0.0 ? h / gn : h);
                     });
                   },
                   [&](const Cylinder& cyl) {
                     const auto [a, b] = otherAxes(cyl.axis);
                     const double rho = std::hypot(p[a] - cyl.center[0], p[b] - cyl.center[1]);
                     depth = std::min(depth, cyl.radius - rho);
                   },
                   [&](const AxisSlab& s) {
                     depth = std::min({depth, p[s.axis] - s.lower, s.upper - p[s.axis]});
                   },
               },
               c);
  }
  return std::max(depth, 0.0);
}

std::optional<double> axisDistance(const Eigen::Vector3d& p, const ObstacleSpec& obstacle) {
  for (const auto& c : obstacle.constraints) {
    if (const auto* cyl = std::get_if<Cylinder>(&c)) {
      const auto [a, b] = otherAxes(cyl->axis);
      return std::hypot(p[a] - cyl->center[0], p[b] - cyl->center[1]);
    }
  }
  return std::nullopt;
}

}  // namespace mavnmpc
