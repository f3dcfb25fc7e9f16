#pragma once

// Small optimization problems with known solutions, shared by the solver unit tests
// and the acceptance runner.

#include "mavnmpc/box.hpp"
#include "mavnmpc/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace zoo {

struct Problem {
  std::string name;
  Eigen::MatrixXd hessian;  // empty for non-quadratic problems
  Eigen::VectorXd linear;
  mavnmpc::BoxSet box;
  Eigen::VectorXd start;
  Eigen::VectorXd solution;
  bool rosenbrock = false;

  mavnmpc::FunctionOracle oracle() const {
    if (rosenbrock) {
      return mavnmpc::FunctionOracle(
          [](const Eigen::VectorXd& u) { return std::pow(1 - u[0], 2) + 100 * std::pow(u[1] - u[0] * u[0], 2); },
          [](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
            g[0] = -2 * (1 - u[0]) - 400 * u[0] * (u[1] - u[0] * u[0]);
            g[1] = 200 * (u[1] - u[0] * u[0]);
          });
    }
    const Eigen::MatrixXd A = hessian;
    const Eigen::VectorXd b = linear;
    return mavnmpc::FunctionOracle([A, b](const Eigen::VectorXd& u) { return 0.5 * u.dot(A * u) + b.dot(u); },
                                   [A, b](const Eigen::VectorXd& u, Eigen::VectorXd& g) { g = A * u + b; });
  }
};

// min 1/2 u'Au + b'u over a box with A diagonal: the minimizer is clamp(-b_i / a_i).
inline Problem diagonalQuadratic(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Problem p;
  p.name = "diagonal-quadratic-n" + std::to_string(n);
  Eigen::VectorXd a(n);
  p.linear.resize(n);
  p.box = {Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0)};
  p.start = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    a[i] = std::pow(10.0, 2.0 * unit(rng));  // curvatures in [1, 100]
    p.linear[i] = a[i] * (3.0 * unit(rng) - 1.5);  // about a third of the bounds end up active
  }
  p.hessian = a.asDiagonal();
  p.solution = (-p.linear.cwiseQuotient(a)).cwiseMax(p.box.lower).cwiseMin(p.box.upper);
  return p;
}

// Coupled 2-D quadratic whose minimizer sits on the upper bound of u_0. The solution
// follows by hand from the KKT conditions: with u_0 = 1 fixed, u_1 minimizes
// 1/2 a22 u_1^2 + (a12 + b_1) u_1.
inline Problem coupledQuadratic2d() {
  Problem p;
  p.name = "coupled-quadratic-n2";
  p.hessian.resize(2, 2);
  p.hessian << 4.0, 1.0, 1.0, 3.0;
  p.linear = Eigen::Vector2d(-8.0, 1.0);
  p.box = {Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0)};
  p.start = Eigen::Vector2d(-0.5, 0.5);
  // u_1 = -(1 + 1) / 3, and d/du_0 = 4 + u_1 - 8 < 0 keeps u_0 on its upper bound.
  p.solution = Eigen::Vector2d(1.0, -2.0 / 3.0);
  return p;
}

inline Problem rosenbrock() {
  Problem p;
  p.name = "rosenbrock";
  p.rosenbrock = true;
  p.box = mavnmpc::BoxSet::unbounded(2);
  p.start = Eigen::Vector2d(-1.2, 1.0);
  p.solution = Eigen::Vector2d(1.0, 1.0);
  return p;
}

// The box-constrained quadratics of the zoo.
inline std::vector<Problem> quadratics() {
  return {coupledQuadratic2d(), diagonalQuadratic(2, 1), diagonalQuadratic(50, 2), diagonalQuadratic(50, 3)};
}

}  // namespace zoo
