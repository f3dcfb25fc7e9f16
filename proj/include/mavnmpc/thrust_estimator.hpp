#pragma once

#include <optional>
#include <string_view>

namespace mavnmpc {

/// Special thrust constant estimate C_hat (m/s^2) and its variance.
struct EstimatorState {
  double c_hat = 2.0 * 9.81;
  double variance = 100.0;
};

struct EstimatorConfig {
  double initial_variance = 100.0;  // P0
  double process_variance = 1e-3;   // Q_T, added once per update
  double measurement_variance = 1.0;  // R_T
  double gravity = 9.81;
  double lower_factor = 1.0;        // C in [lower_factor g, upper_factor g]
  double upper_factor = 10.0;
  double min_signal = 0.1;          // samples with u_T below this are discarded
  double initial_c_hat = 2.0 * 9.81;

  double lowerBound() const { return lower_factor * gravity; }
  double upperBound() const { return upper_factor * gravity; }
  void validate() const;
};

enum class RejectReason { kLowSignal, kOutOfBounds };

std::string_view toString(RejectReason reason);

/// Outcome of the direct estimate a_m / u_T^2: the value or why it was discarded.
struct DirectEstimate {
  double c_tilde = 0.0;
  std::optional<RejectReason> rejected;

  bool accepted() const { return !rejected.has_value(); }
};

DirectEstimate directEstimate(double accel, double signal, const EstimatorConfig& cfg);

/// Random-walk predict followed by a scalar EKF correction with H = u_T^2. The
/// posterior is clamped to the admissible range. Throws std::invalid_argument if the
/// sample does not pass `directEstimate`.
EstimatorState ekfUpdate(const EstimatorState& state, double accel, double signal, const EstimatorConfig& cfg);

/// u_T = clamp(sqrt(T_d / C_hat), 0, 1); negative thrust maps to 0.
double thrustToSignal(double thrust, double c_hat);

/// Filter plus outlier gate as owned by the control loop.
class ThrustEstimator {
 public:
  explicit ThrustEstimator(EstimatorConfig cfg);

  /// Feeds one accelerometer sample taken while `signal` was applied. Returns the
  /// gate decision; the state only changes for accepted samples.
  DirectEstimate observe(double accel, double signal);

  double signalFor(double thrust) const { return thrustToSignal(thrust, state_.c_hat); }
  const EstimatorState& state() const { return state_; }
  const EstimatorConfig& config() const { return cfg_; }

 private:
  EstimatorConfig cfg_;
  EstimatorState state_;
};

}  // namespace mavnmpc
