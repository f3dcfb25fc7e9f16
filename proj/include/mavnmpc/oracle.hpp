#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>

namespace mavnmpc {

/// Cost and gradient oracle for minimize_{u in U} phi(u).
class CostOracle {
 public:
  virtual ~CostOracle() = default;
  virtual double value(const Eigen::VectorXd& u) = 0;
  /// Returns phi(u) and writes grad phi(u) into `grad` (resized as needed).
  virtual double valueAndGradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) = 0;
};

/// Oracle assembled from two callables; handy for test problems.
class FunctionOracle final : public CostOracle {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradientFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

  FunctionOracle(ValueFn value, GradientFn gradient)
      : value_(std::move(value)), gradient_(std::move(gradient)) {}

  double value(const Eigen::VectorXd& u) override { return value_(u); }
  double valueAndGradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) override {
    grad.resize(u.size());
    gradient_(u, grad);
    return value_(u);
  }

 private:
  ValueFn value_;
  GradientFn gradient_;
};

}  // namespace mavnmpc
