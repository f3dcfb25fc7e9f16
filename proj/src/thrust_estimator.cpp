#include "mavnmpc/thrust_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mavnmpc {

void EstimatorConfig::validate() const {
  if (!(initial_variance > 0.0) || !(process_variance > 0.0) || !(measurement_variance > 0.0)) {
    throw std::invalid_argument("estimator variances must be positive");
  }
  if (!(gravity > 0.0) || !(lower_factor > 0.0) || !(upper_factor > lower_factor)) {
    throw std::invalid_argument("estimator bounds must satisfy 0 < lower < upper");
  }
  if (!(min_signal > 0.0 && min_signal <= 1.0)) throw std::invalid_argument("min_signal must lie in (0, 1]");
  if (initial_c_hat < lowerBound() || initial_c_hat > upperBound()) {
    throw std::invalid_argument("initial estimate outside the admissible range");
  }
}

std::string_view toString(RejectReason reason) {
  switch (reason) {
    case RejectReason::kLowSignal: return "low-signal";
    case RejectReason::kOutOfBounds: return "out-of-bounds";
  }
  return "unknown";
}

DirectEstimate directEstimate(double accel, double signal, const EstimatorConfig& cfg) {
  DirectEstimate out;
  if (!(signal >= cfg.min_signal)) {
    out.rejected = RejectReason::kLowSignal;
    return out;
  }
  out.c_tilde = accel / (signal * signal);
  if (!(out.c_tilde >= cfg.lowerBound() && out.c_tilde <= cfg.upperBound())) {
    out.rejected = RejectReason::kOutOfBounds;
  }
  return out;
}

EstimatorState ekfUpdate(const EstimatorState& state, double accel, double signal, const EstimatorConfig& cfg) {
  if (!directEstimate(accel, signal, cfg).accepted()) {
    throw std::invalid_argument("measurement rejected by the direct-estimate gate");
  }
  const double p_prior = state.variance + cfg.process_variance;
  const double h = signal * signal;
  const double gain = p_prior * h / (h * h * p_prior + cfg.measurement_variance);
  EstimatorState out;
  out.c_hat = std::clamp(state.c_hat + gain * (accel - state.c_hat * h), cfg.lowerBound(), cfg.upperBound());
  out.variance = (1.0 - gain * h) * p_prior;
  return out;
}

double thrustToSignal(double thrust, double c_hat) {
  if (!(thrust > 0.0)) return 0.0;
  return std::clamp(std::sqrt(thrust / c_hat), 0.0, 1.0);
}

ThrustEstimator::ThrustEstimator(EstimatorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  state_.c_hat = cfg_.initial_c_hat;
  state_.variance = cfg_.initial_variance;
}

DirectEstimate ThrustEstimator::observe(double accel, double signal) {
  const DirectEstimate gate = directEstimate(accel, signal, cfg_);
  if (gate.accepted()) state_ = ekfUpdate(state_, accel, signal, cfg_);
  return gate;
}

}  // namespace mavnmpc
