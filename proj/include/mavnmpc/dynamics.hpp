#pragma once

#include <Eigen/Dense>

namespace mavnmpc {

inline constexpr int kStateDim = 8;
inline constexpr int kInputDim = 3;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using InputVector = Eigen::Matrix<double, kInputDim, 1>;

// Index layout of StateVector: position, velocity, roll, pitch.
enum StateIndex : int {
  kPx = 0, kPy, kPz, kVx, kVy, kVz, kRoll, kPitch
};

// Index layout of InputVector: thrust acceleration, roll and pitch references.
enum InputIndex : int {
  kThrust = 0, kRollRef, kPitchRef
};

/// Position, velocity (world frame, yaw-compensated) and roll/pitch of the vehicle.
struct MavState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double roll = 0.0;
  double pitch = 0.0;

  StateVector toVector() const;
  static MavState fromVector(const StateVector& x);
  bool allFinite() const;
};

/// Commanded thrust acceleration (m/s^2) and attitude references (rad).
struct ControlInput {
  double thrust = 0.0;
  double roll_ref = 0.0;
  double pitch_ref = 0.0;

  InputVector toVector() const { return {thrust, roll_ref, pitch_ref}; }
  static ControlInput fromVector(const InputVector& u) { return {u[0], u[1], u[2]}; }
};

struct ModelParams {
  Eigen::Vector3d drag{0.1, 0.1, 0.2};
  double tau_roll = 0.5;
  double tau_pitch = 0.5;
  double gain_roll = 1.0;
  double gain_pitch = 1.0;
  double gravity = 9.81;

  /// Throws std::invalid_argument when a time constant or gravity is not positive
  /// or a drag coefficient is negative.
  void validate() const;
};

enum class Integrator { kEuler, kRk4 };

/// R = R_y(pitch) * R_x(roll).
Eigen::Matrix3d rotationMatrix(double roll, double pitch);

StateVector derivative(const StateVector& x, const InputVector& u, const ModelParams& params);
MavState derivative(const MavState& x, const ControlInput& u, const ModelParams& params);

/// Vector-Jacobian product of the continuous dynamics: returns (df/dx)^T w and
/// accumulates (df/du)^T w into `u_bar`.
StateVector derivativeVjp(const StateVector& x, const InputVector& u, const ModelParams& params,
                          const StateVector& w, InputVector& u_bar);

/// One explicit integration step of length dt with the input held constant.
StateVector step(const StateVector& x, const InputVector& u, const ModelParams& params, double dt,
                 Integrator method);
MavState step(const MavState& x, const ControlInput& u, const ModelParams& params, double dt,
              Integrator method);

/// Reverse-mode sweep through one `step`: given the adjoint `x_next_bar` of the
/// step output, returns the adjoint of the step input state and adds the input
/// adjoint into `u_bar`. Only Jacobian-transpose-vector products are formed.
StateVector stepVjp(const StateVector& x, const InputVector& u, const ModelParams& params, double dt,
                    Integrator method, const StateVector& x_next_bar, InputVector& u_bar);

/// The input that holds the vehicle at rest: (g, 0, 0).
inline InputVector hoverInput(const ModelParams& params) { return {params.gravity, 0.0, 0.0}; }

}  // namespace mavnmpc
