#pragma once

#include "mavnmpc/panoc.hpp"
#include "mavnmpc/scenario.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mavnmpc {

/// One control tick. State and input are those at the start of the tick.
struct LogRow {
  double t = 0.0;
  StateVector state = StateVector::Zero();
  InputVector input = InputVector::Zero();
  double signal = 0.0;  // u_T
  int reference_index = 0;
  double axis_distance = 0.0;  // NaN when no cylinder obstacle is present

  int iterations = 0;
  double solve_time_s = 0.0;
  double avg_iteration_time_s = 0.0;
  double residual_inf = 0.0;
  double residual_norm = 0.0;
  double initial_residual_norm = 0.0;
  SolverStatus status = SolverStatus::kConverged;

  double accel_measured = 0.0;
  bool accepted = false;
  double c_hat = 0.0;
  double variance = 0.0;
  double c_true = 0.0;

  double penetration = 0.0;       // centre-point depth into the enlarged sets
  double real_penetration = 0.0;  // centre-point depth into the physical obstacles
  bool reference_switched = false;  // the reference changed right before this tick

  // Only filled when cold-start comparison is enabled.
  int cold_iterations = -1;
  double cold_initial_residual_norm = -1.0;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
};

struct SimulationOptions {
  /// Timing columns are written as 0 when false, making the CSVs reproducible byte for byte.
  bool record_timing = true;
  /// Also solve every tick from the cold (hover) initial guess and record its statistics.
  bool compare_cold_start = false;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, SolverDiagnostics diagnostics = {});
  double time() const { return t_; }
  const SolverDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  double t_;
  SolverDiagnostics diagnostics_;
};

/// Advances cyclically to the next reference once the position is within the
/// switch radius of the current one.
int referenceScheduler(const Eigen::Vector3d& position, const ReferenceSchedule& schedule, int current);

/// Previous solution moved one block earlier, last block repeated.
Eigen::VectorXd shiftWarmStart(const Eigen::VectorXd& previous);

TrajectoryLog runClosedLoop(const ScenarioConfig& scenario, const SimulationOptions& options = {});

void exportCsv(const TrajectoryLog& log, const std::filesystem::path& trajectory_path,
               const std::filesystem::path& diagnostics_path);

std::string trajectoryCsvHeader();
std::string diagnosticsCsvHeader();

/// Reads both CSVs back into a log (fields not present in the files stay default).
TrajectoryLog importCsv(const std::filesystem::path& trajectory_path, const std::filesystem::path& diagnostics_path);

}  // namespace mavnmpc
