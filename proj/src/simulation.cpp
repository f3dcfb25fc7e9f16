#include "mavnmpc/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mavnmpc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd repeatedInput(const InputVector& u, int horizon) {
  Eigen::VectorXd out(kInputDim * horizon);
  for (int k = 0; k < horizon; ++k) out.segment<kInputDim>(kInputDim * k) = u;
  return out;
}

double maxPenetration(const Eigen::Vector3d& p, const std::vector<ObstacleSpec>& obstacles,
                      const CornerPointSet* corners, double t) {
  double depth = 0.0;
  for (const auto& o : obstacles) {
    if (corners) {
      for (std::size_t i = 0; i < corners->offsets.size(); ++i) {
        depth = std::max(depth, penetrationDepth(corners->corner(i, p), o, t));
      }
    } else {
      depth = std::max(depth, penetrationDepth(p, o, t));
    }
  }
  return depth;
}

double firstAxisDistance(const Eigen::Vector3d& p, const std::vector<ObstacleSpec>& obstacles) {
  for (const auto& o : obstacles) {
    if (const auto d = axisDistance(p, o)) return *d;
  }
  return kNaN;
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream openForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::vector<std::string>> readCsv(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error("'" + path.string() + "': unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

double parseDouble(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

SolverStatus parseStatus(const std::string& s) {
  if (s == toString(SolverStatus::kConverged)) return SolverStatus::kConverged;
  if (s == toString(SolverStatus::kMaxIterations)) return SolverStatus::kMaxIterations;
  if (s == toString(SolverStatus::kLineSearchFailure)) return SolverStatus::kLineSearchFailure;
  throw std::runtime_error("unknown solver status '" + s + "'");
}

}  // namespace

SimulationError::SimulationError(const std::string& what, double t, SolverDiagnostics diagnostics)
    : std::runtime_error(what), t_(t), diagnostics_(diagnostics) {}

int referenceScheduler(const Eigen::Vector3d& position, const ReferenceSchedule& schedule, int current) {
  const int count = static_cast<int>(schedule.positions.size());
  if (count <= 1) return 0;
  if ((position - schedule.positions[current]).norm() < schedule.switch_radius) return (current + 1) % count;
  return current;
}

Eigen::VectorXd shiftWarmStart(const Eigen::VectorXd& previous) {
  const Eigen::Index n = previous.size();
  Eigen::VectorXd out(n);
  out.head(n - kInputDim) = previous.tail(n - kInputDim);
  out.tail<kInputDim>() = previous.tail<kInputDim>();
  return out;
}

TrajectoryLog runClosedLoop(const ScenarioConfig& scenario, const SimulationOptions& options) {
  scenario.validate();
  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  EstimatorConfig est_cfg = scenario.estimator;
  est_cfg.gravity = scenario.model.gravity;
  ThrustEstimator estimator(est_cfg);
  PanocSolver solver(scenario.solver);

  const auto& refs = scenario.references;
  const std::vector<ObstacleSpec> enlarged = scenario.enlargedObstacles();
  int ref_index = 0;
  ShootingProblem problem(scenario.buildOcp(refs.positions[0]), scenario.initial_state.toVector());
  const BoxSet box = problem.config().inputBox();
  const InputVector hover = hoverInput(scenario.model);
  const Eigen::VectorXd cold_guess = repeatedInput(hover, scenario.horizon);
  const bool rate_penalty = scenario.weights.input_rate.any();

  Eigen::VectorXd previous_solution = cold_guess;
  StateVector plant = scenario.initial_state.toVector();
  bool switched = false;
  const double dt = scenario.sampling_period;
  const int ticks = scenario.tickCount();

  TrajectoryLog log;
  log.rows.reserve(static_cast<std::size_t>(ticks));
  for (int k = 0; k < ticks; ++k) {
    const double t = k * dt;
    LogRow row;
    row.t = t;
    row.state = plant;
    row.reference_index = ref_index;
    row.reference_switched = switched;
    const Eigen::Vector3d p = plant.segment<3>(kPx);
    row.axis_distance = firstAxisDistance(p, enlarged);
    row.penetration = maxPenetration(p, enlarged, &scenario.vehicle, t);
    row.real_penetration = maxPenetration(p, scenario.obstacles, nullptr, t);

    StateVector measured = plant;
    if (scenario.plant.feedback_noise_std > 0.0) {
      for (int i = 0; i < 3; ++i) measured[kPx + i] += scenario.plant.feedback_noise_std * normal(rng);
    }

    OcpConfig& ocp = problem.mutableConfig();
    ocp.setPositionReference(refs.positions[ref_index]);
    ocp.t0 = t;
    problem.setInitialState(measured);

    const Eigen::VectorXd guess = k == 0 ? cold_guess : shiftWarmStart(previous_solution);
    SolveResult result;
    try {
      result = solver.solve(problem, box, guess);
    } catch (const std::invalid_argument& e) {
      throw SimulationError(std::string("solver rejected the problem: ") + e.what(), t);
    }
    if (result.diagnostics.status == SolverStatus::kLineSearchFailure) {
      throw SimulationError("solver line-search failure", t, result.diagnostics);
    }
    if (options.compare_cold_start) {
      const SolveResult cold = solver.solve(problem, box, cold_guess);
      row.cold_iterations = cold.diagnostics.iterations;
      row.cold_initial_residual_norm = cold.diagnostics.initial_residual_norm;
    }
    previous_solution = result.u;

    const InputVector command = result.u.head<kInputDim>();
    if (rate_penalty) ocp.previous_input = command;
    row.input = command;
    row.iterations = result.diagnostics.iterations;
    row.status = result.diagnostics.status;
    row.residual_inf = result.diagnostics.residual_inf;
    row.residual_norm = result.diagnostics.residual_norm;
    row.initial_residual_norm = result.diagnostics.initial_residual_norm;
    if (options.record_timing) {
      row.solve_time_s = result.diagnostics.solve_time_s;
      row.avg_iteration_time_s = result.diagnostics.avg_iteration_time_s;
    }

    // Thrust path: T_d -> u_T with the current estimate -> true acceleration C u_T^2.
    const double c_true = scenario.plant.thrust_constant.at(t, scenario.duration);
    const double signal = estimator.signalFor(command[kThrust]);
    const double applied = c_true * signal * signal;
    const InputVector plant_input{applied, command[kRollRef], command[kPitchRef]};

    const double sub_dt = dt / scenario.plant.substeps;
    for (int s = 0; s < scenario.plant.substeps; ++s) {
      plant = step(plant, plant_input, scenario.model, sub_dt, scenario.plant.integrator);
    }
    if (!plant.allFinite()) throw SimulationError("plant state became non-finite", t + dt);
    if (std::abs(plant[kRoll]) >= std::numbers::pi / 2 || std::abs(plant[kPitch]) >= std::numbers::pi / 2) {
      throw SimulationError("attitude left (-pi/2, pi/2)", t + dt);
    }

    const double accel = applied + scenario.plant.imu_noise_std * normal(rng);
    const DirectEstimate gate = estimator.observe(accel, signal);
    row.signal = signal;
    row.accel_measured = accel;
    row.accepted = gate.accepted();
    row.c_hat = estimator.state().c_hat;
    row.variance = estimator.state().variance;
    row.c_true = c_true;
    log.rows.push_back(row);

    const int next_index = referenceScheduler(plant.segment<3>(kPx), refs, ref_index);
    switched = next_index != ref_index;
    ref_index = next_index;
  }
  return log;
}

std::string trajectoryCsvHeader() {
  return "t,px,py,pz,vx,vy,vz,roll,pitch,Td,roll_d,pitch_d,uT,ref_idx,dist_axis";
}

std::string diagnosticsCsvHeader() {
  return "t,iters,solve_time_s,avg_iter_time_s,res_inf,status,C_hat,P,a_m,accepted";
}

void exportCsv(const TrajectoryLog& log, const std::filesystem::path& trajectory_path,
               const std::filesystem::path& diagnostics_path) {
  std::ofstream traj = openForWrite(trajectory_path);
  std::ofstream diag = openForWrite(diagnostics_path);
  traj << trajectoryCsvHeader() << '\n';
  diag << diagnosticsCsvHeader() << '\n';
  for (const auto& r : log.rows) {
    traj << format(r.t);
    for (int i = 0; i < kStateDim; ++i) traj << ',' << format(r.state[i]);
    for (int i = 0; i < kInputDim; ++i) traj << ',' << format(r.input[i]);
    traj << ',' << format(r.signal) << ',' << r.reference_index << ',' << format(r.axis_distance) << '\n';

    diag << format(r.t) << ',' << r.iterations << ',' << format(r.solve_time_s) << ','
         << format(r.avg_iteration_time_s) << ',' << format(r.residual_inf) << ',' << toString(r.status) << ','
         << format(r.c_hat) << ',' << format(r.variance) << ',' << format(r.accel_measured) << ','
         << (r.accepted ? 1 : 0) << '\n';
  }
  traj.flush();
  diag.flush();
  if (!traj) throw std::runtime_error("write failed for '" + trajectory_path.string() + "'");
  if (!diag) throw std::runtime_error("write failed for '" + diagnostics_path.string() + "'");
}

TrajectoryLog importCsv(const std::filesystem::path& trajectory_path, const std::filesystem::path& diagnostics_path) {
  const auto traj = readCsv(trajectory_path, trajectoryCsvHeader());
  const auto diag = readCsv(diagnostics_path, diagnosticsCsvHeader());
  if (traj.size() != diag.size()) throw std::runtime_error("trajectory and diagnostics row counts differ");
  TrajectoryLog log;
  log.rows.resize(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].size() != 15 || diag[i].size() != 10) {
      throw std::runtime_error("malformed CSV row " + std::to_string(i + 2));
    }
    LogRow& r = log.rows[i];
    r.t = parseDouble(traj[i][0]);
    for (int k = 0; k < kStateDim; ++k) r.state[k] = parseDouble(traj[i][1 + k]);
    for (int k = 0; k < kInputDim; ++k) r.input[k] = parseDouble(traj[i][9 + k]);
    r.signal = parseDouble(traj[i][12]);
    r.reference_index = std::stoi(traj[i][13]);
    r.axis_distance = parseDouble(traj[i][14]);

    r.iterations = std::stoi(diag[i][1]);
    r.solve_time_s = parseDouble(diag[i][2]);
    r.avg_iteration_time_s = parseDouble(diag[i][3]);
    r.residual_inf = parseDouble(diag[i][4]);
    r.status = parseStatus(diag[i][5]);
    r.c_hat = parseDouble(diag[i][6]);
    r.variance = parseDouble(diag[i][7]);
    r.accel_measured = parseDouble(diag[i][8]);
    r.accepted = diag[i][9] == "1";
  }
  return log;
}

}  // namespace mavnmpc
