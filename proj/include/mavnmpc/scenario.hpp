#pragma once

#include "mavnmpc/dynamics.hpp"
#include "mavnmpc/obstacle.hpp"
#include "mavnmpc/ocp.hpp"
#include "mavnmpc/panoc.hpp"
#include "mavnmpc/thrust_estimator.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mavnmpc {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReferenceSchedule {
  std::vector<Eigen::Vector3d> positions;
  double switch_radius = 0.3;
};

/// True special thrust constant of the simulated vehicle, drifting linearly from
/// `start` at t = 0 to `end` at the end of the run.
struct ThrustConstantProfile {
  double start = 20.0;
  double end = 20.0;

  double at(double t, double duration) const { return start + (end - start) * (t / duration); }
};

struct PlantOptions {
  Integrator integrator = Integrator::kEuler;
  int substeps = 1;
  double imu_noise_std = 0.4;       // accelerometer noise (m/s^2)
  double feedback_noise_std = 0.0;  // position noise on the fed-back state (m)
  ThrustConstantProfile thrust_constant;
};

struct ScenarioConfig {
  std::string name = "obstacle-traversal";
  ModelParams model;
  int horizon = 40;
  double sampling_period = 0.05;
  Integrator prediction_integrator = Integrator::kEuler;
  CostWeights weights;
  InputBounds bounds;
  CornerPointSet vehicle;
  /// Physical obstacle geometry; the controller sees it enlarged by the ball radius plus margin.
  std::vector<ObstacleSpec> obstacles;
  ReferenceSchedule references;
  MavState initial_state;
  double duration = 60.0;
  PlantOptions plant;
  SolverConfig solver;
  EstimatorConfig estimator;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<ObstacleSpec> enlargedObstacles() const;
  /// OCP for a solve at time t towards `p_ref`.
  OcpConfig buildOcp(const Eigen::Vector3d& p_ref) const;
  int tickCount() const;

  /// Upright 0.45 m cylinder at the origin, references (-2,0,1) and (2,0,1.5).
  static ScenarioConfig obstacleTraversal();
  /// Position hold at (0,0,1) while the true thrust constant drifts 22 -> 18.
  static ScenarioConfig hoverBatteryDrain();
};

ScenarioConfig parseScenario(const std::string& json_text);
ScenarioConfig loadScenario(const std::filesystem::path& path);
std::string scenarioToJson(const ScenarioConfig& scenario);

}  // namespace mavnmpc
