#include "mavnmpc/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace mavnmpc {

StateVector MavState::toVector() const {
  StateVector x;
  x << p, v, roll, pitch;
  return x;
}

MavState MavState::fromVector(const StateVector& x) {
  MavState s;
  s.p = x.segment<3>(kPx);
  s.v = x.segment<3>(kVx);
  s.roll = x[kRoll];
  s.pitch = x[kPitch];
  return s;
}

bool MavState::allFinite() const {
  return p.allFinite() && v.allFinite() && std::isfinite(roll) && std::isfinite(pitch);
}

void ModelParams::validate() const {
  if (!(tau_roll > 0.0) || !(tau_pitch > 0.0)) {
    throw std::invalid_argument("attitude time constants must be positive");
  }
  if (!(drag.array() >= 0.0).all()) {
    throw std::invalid_argument("drag coefficients must be non-negative");
  }
  if (!(gravity > 0.0)) {
    throw std::invalid_argument("gravity must be positive");
  }
}

Eigen::Matrix3d rotationMatrix(double roll, double pitch) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  Eigen::Matrix3d rx;
  rx << 1.0, 0.0, 0.0,
        0.0, cr, -sr,
        0.0, sr, cr;
  Eigen::Matrix3d ry;
  ry << cp, 0.0, sp,
        0.0, 1.0, 0.0,
        -sp, 0.0, cp;
  return ry * rx;
}

StateVector derivative(const StateVector& x, const InputVector& u, const ModelParams& params) {
  const double roll = x[kRoll], pitch = x[kPitch];
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double thrust = u[kThrust];

  StateVector dx;
  dx.segment<3>(kPx) = x.segment<3>(kVx);
  // Third column of R_y(pitch) R_x(roll), scaled by the thrust acceleration.
  dx[kVx] = thrust * sp * cr - params.drag[0] * x[kVx];
  dx[kVy] = -thrust * sr - params.drag[1] * x[kVy];
  dx[kVz] = thrust * cp * cr - params.gravity - params.drag[2] * x[kVz];
  dx[kRoll] = (params.gain_roll * u[kRollRef] - roll) / params.tau_roll;
  dx[kPitch] = (params.gain_pitch * u[kPitchRef] - pitch) / params.tau_pitch;
  return dx;
}

MavState derivative(const MavState& x, const ControlInput& u, const ModelParams& params) {
  return MavState::fromVector(derivative(x.toVector(), u.toVector(), params));
}

StateVector derivativeVjp(const StateVector& x, const InputVector& u, const ModelParams& params,
                          const StateVector& w, InputVector& u_bar) {
  const double roll = x[kRoll], pitch = x[kPitch];
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double thrust = u[kThrust];
  const Eigen::Vector3d wv = w.segment<3>(kVx);

  StateVector x_bar;
  x_bar.segment<3>(kPx).setZero();
  x_bar.segment<3>(kVx) = w.segment<3>(kPx) - params.drag.cwiseProduct(wv);
  x_bar[kRoll] = thrust * (-sp * sr * wv[0] - cr * wv[1] - cp * sr * wv[2]) - w[kRoll] / params.tau_roll;
  x_bar[kPitch] = thrust * (cp * cr * wv[0] - sp * cr * wv[2]) - w[kPitch] / params.tau_pitch;

  u_bar[kThrust] += sp * cr * wv[0] - sr * wv[1] + cp * cr * wv[2];
  u_bar[kRollRef] += params.gain_roll / params.tau_roll * w[kRoll];
  u_bar[kPitchRef] += params.gain_pitch / params.tau_pitch * w[kPitch];
  return x_bar;
}

StateVector step(const StateVector& x, const InputVector& u, const ModelParams& params, double dt,
                 Integrator method) {
  if (method == Integrator::kEuler) {
    return x + dt * derivative(x, u, params);
  }
  const StateVector k1 = derivative(x, u, params);
  const StateVector k2 = derivative(x + 0.5 * dt * k1, u, params);
  const StateVector k3 = derivative(x + 0.5 * dt * k2, u, params);
  const StateVector k4 = derivative(x + dt * k3, u, params);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

MavState step(const MavState& x, const ControlInput& u, const ModelParams& params, double dt,
              Integrator method) {
  return MavState::fromVector(step(x.toVector(), u.toVector(), params, dt, method));
}

StateVector stepVjp(const StateVector& x, const InputVector& u, const ModelParams& params, double dt,
                    Integrator method, const StateVector& x_next_bar, InputVector& u_bar) {
  if (method == Integrator::kEuler) {
    return x_next_bar + derivativeVjp(x, u, params, dt * x_next_bar, u_bar);
  }
  // Recompute the stage points, then sweep them in reverse.
  const StateVector k1 = derivative(x, u, params);
  const StateVector x2 = x + 0.5 * dt * k1;
  const StateVector k2 = derivative(x2, u, params);
  const StateVector x3 = x + 0.5 * dt * k2;
  const StateVector k3 = derivative(x3, u, params);
  const StateVector x4 = x + dt * k3;

  StateVector x_bar = x_next_bar;
  const StateVector k4_bar = (dt / 6.0) * x_next_bar;
  StateVector k3_bar = (dt / 3.0) * x_next_bar;
  StateVector k2_bar = (dt / 3.0) * x_next_bar;
  StateVector k1_bar = (dt / 6.0) * x_next_bar;

  const StateVector x4_bar = derivativeVjp(x4, u, params, k4_bar, u_bar);
  x_bar += x4_bar;
  k3_bar += dt * x4_bar;

  const StateVector x3_bar = derivativeVjp(x3, u, params, k3_bar, u_bar);
  x_bar += x3_bar;
  k2_bar += 0.5 * dt * x3_bar;

  const StateVector x2_bar = derivativeVjp(x2, u, params, k2_bar, u_bar);
  x_bar += x2_bar;
  k1_bar += 0.5 * dt * x2_bar;

  x_bar += derivativeVjp(x, u, params, k1_bar, u_bar);
  return x_bar;
}

}  // namespace mavnmpc
