#pragma once

#include "mavnmpc/box.hpp"
#include "mavnmpc/dynamics.hpp"
#include "mavnmpc/obstacle.hpp"
#include "mavnmpc/oracle.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace mavnmpc {

/// Diagonals of the stage, input, terminal and input-rate weight matrices.
struct CostWeights {
  StateVector state = (StateVector() << 3, 3, 12, 1, 1, 1, 3, 3).finished();
  InputVector input{2, 10, 10};
  StateVector terminal = 10.0 * (StateVector() << 3, 3, 12, 1, 1, 1, 3, 3).finished();
  InputVector input_rate = InputVector::Zero();

  void validate() const;
};

struct InputBounds {
  InputVector lower{0.0, -0.5, -0.5};
  InputVector upper{2.0 * 9.81, 0.5, 0.5};
};

struct OcpConfig {
  int horizon = 40;
  double sampling_period = 0.05;
  Integrator integrator = Integrator::kEuler;
  InputBounds bounds;
  StateVector x_ref = StateVector::Zero();
  InputVector u_ref{9.81, 0.0, 0.0};
  /// Already-enlarged sets Theta_j; corner points are tested against these directly.
  std::vector<ObstacleSpec> obstacles;
  CornerPointSet corners;
  CostWeights weights;
  ModelParams params;
  /// Absolute time of prediction step 0; step k is evaluated at t0 + k * T_s.
  double t0 = 0.0;
  /// Input applied during the previous sampling period, used by the rate penalty at k = 0.
  std::optional<InputVector> previous_input;

  void validate() const;
  Eigen::Index decisionSize() const { return kInputDim * horizon; }
  /// The input box repeated over the horizon.
  BoxSet inputBox() const;
  /// Sets x_ref to [p_ref, 0, ..., 0].
  void setPositionReference(const Eigen::Vector3d& p_ref);
};

class DivergedTrajectoryError : public std::runtime_error {
 public:
  DivergedTrajectoryError(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

using ControlSequence = Eigen::VectorXd;

inline auto inputBlock(const ControlSequence& u, int k) { return u.segment<kInputDim>(kInputDim * k); }
inline auto inputBlock(ControlSequence& u, int k) { return u.segment<kInputDim>(kInputDim * k); }

/// Sum over obstacles and corner points of lambda_j * psi_j(c_i(p)).
double obstaclePenalty(const Eigen::Vector3d& p, const OcpConfig& cfg, double t, bool terminal);

/// Stage cost including the obstacle penalty and, when `u_prev` is given, the input-rate term.
double stageCost(const StateVector& x, const InputVector& u, const std::optional<InputVector>& u_prev,
                 int k, const OcpConfig& cfg);
double terminalCost(const StateVector& x, const OcpConfig& cfg);

/// States F_0 .. F_N of the single-shooting recursion. Throws DivergedTrajectoryError
/// when a non-finite state appears.
std::vector<StateVector> shoot(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg);

double totalCost(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg);

/// Gradient of totalCost by one forward shoot and one reverse adjoint sweep.
Eigen::VectorXd gradTotalCost(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg);

/// The NMPC cost phi(u; x0) as a solver oracle; diverged trajectories evaluate to
/// +inf. Holds its own trajectory workspace, so one instance must not be shared
/// between threads.
class ShootingProblem final : public CostOracle {
 public:
  ShootingProblem(OcpConfig cfg, const StateVector& x0);

  double value(const Eigen::VectorXd& u) override;
  double valueAndGradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) override;

  const OcpConfig& config() const { return cfg_; }
  const StateVector& initialState() const { return x0_; }
  void setInitialState(const StateVector& x0) { x0_ = x0; }
  OcpConfig& mutableConfig() { return cfg_; }

 private:
  OcpConfig cfg_;
  StateVector x0_;
  std::vector<StateVector> states_;
};

}  // namespace mavnmpc
