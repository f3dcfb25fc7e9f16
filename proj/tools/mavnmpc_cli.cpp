// Command-line front end: closed-loop simulation, gradient audit, single solve.

#include "mavnmpc/gradcheck.hpp"
#include "mavnmpc/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace mavnmpc;

// Machine-readable failure line: error=<code> message="<text>"
int fail(const std::string& code, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += (c == '\n') ? ' ' : c;
  }
  std::cerr << "error=" << code << " message=\"" << escaped << "\"\n";
  return 2;
}

StateVector parseStateRow(const std::string& row) {
  StateVector x;
  std::stringstream ss(row);
  std::string field;
  int i = 0;
  while (std::getline(ss, field, ',')) {
    if (i >= kStateDim) throw std::invalid_argument("state row has more than 8 values");
    std::size_t used = 0;
    x[i] = std::stod(field, &used);
    ++i;
  }
  if (i != kStateDim) throw std::invalid_argument("state row needs 8 comma-separated values px,py,pz,vx,vy,vz,roll,pitch");
  return x;
}

std::vector<int> parseHorizons(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(std::stoi(field));
  if (out.empty()) throw std::invalid_argument("no horizons given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free NMPC for MAV obstacle avoidance"};
  app.require_subcommand(1);

  std::string scenario_path, traj_path, diag_path, state_row, horizons_text = "1,5,40";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool no_timing = false;
  int probes = 100;

  auto* sim = app.add_subcommand("simulate", "Run the closed-loop receding-horizon simulation");
  sim->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sim->add_option("--out", traj_path, "Trajectory CSV output")->required();
  sim->add_option("--diag", diag_path, "Solver/estimator diagnostics CSV output")->required();
  sim->add_option("--seed", seed, "Override the scenario RNG seed");
  sim->add_option("--duration", duration, "Override the simulated duration (s)");
  sim->add_flag("--no-timing", no_timing, "Write timing columns as 0 (byte-reproducible output)");

  auto* grad = app.add_subcommand("gradcheck", "Compare adjoint gradients with central finite differences");
  grad->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  grad->add_option("--n-probes", probes, "Random probes per horizon")->check(CLI::PositiveNumber);
  grad->add_option("--horizons", horizons_text, "Comma-separated horizon lengths");
  grad->add_option("--seed", seed, "Probe RNG seed");

  auto* solve = app.add_subcommand("solve", "Single NMPC solve from a given state");
  solve->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  solve->add_option("--state", state_row, "px,py,pz,vx,vy,vz,roll,pitch")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  try {
    ScenarioConfig scenario = loadScenario(scenario_path);

    if (*sim) {
      if (seed) scenario.seed = *seed;
      if (duration) scenario.duration = *duration;
      SimulationOptions options;
      options.record_timing = !no_timing;
      const TrajectoryLog log = runClosedLoop(scenario, options);
      exportCsv(log, traj_path, diag_path);
      int converged = 0;
      double total_time = 0.0, min_dist = std::numeric_limits<double>::infinity();
      for (const auto& r : log.rows) {
        converged += r.status == SolverStatus::kConverged;
        total_time += r.solve_time_s;
        if (std::isfinite(r.axis_distance)) min_dist = std::min(min_dist, r.axis_distance);
      }
      std::printf("ticks=%zu converged=%d mean_solve_time_s=%.6g min_dist_axis=%.6g\n", log.rows.size(), converged,
                  total_time / static_cast<double>(log.rows.size()), min_dist);
      return 0;
    }

    if (*grad) {
      GradCheckOptions options;
      options.probes = probes;
      if (seed) options.seed = *seed;
      double worst = 0.0;
      for (int horizon : parseHorizons(horizons_text)) {
        ScenarioConfig s = scenario;
        s.horizon = horizon;
        const GradCheckReport report = gradientAudit(s, options);
        std::printf("horizon=%d probes=%d max_rel_error=%.3e\n", horizon, report.probes, report.max_relative_error);
        worst = std::max(worst, report.max_relative_error);
      }
      std::printf("max_rel_error=%.3e\n", worst);
      return 0;
    }

    if (*solve) {
      const StateVector x0 = parseStateRow(state_row);
      ShootingProblem problem(scenario.buildOcp(scenario.references.positions.front()), x0);
      PanocSolver solver(scenario.solver);
      Eigen::VectorXd guess(problem.config().decisionSize());
      for (int k = 0; k < scenario.horizon; ++k) inputBlock(guess, k) = hoverInput(scenario.model);
      const SolveResult result = solver.solve(problem, problem.config().inputBox(), guess);
      const auto& d = result.diagnostics;
      std::printf("status=%s iterations=%d cost=%.9g res_norm=%.3e res_inf=%.3e solve_time_s=%.6g\n",
                  std::string(toString(d.status)).c_str(), d.iterations, d.cost, d.residual_norm, d.residual_inf,
                  d.solve_time_s);
      for (int k = 0; k < scenario.horizon; ++k) {
        const InputVector u = inputBlock(result.u, k);
        std::printf("u[%d]=%.9g,%.9g,%.9g\n", k, u[0], u[1], u[2]);
      }
      return 0;
    }
  } catch (const ScenarioError& e) {
    return fail("scenario", e.what());
  } catch (const SimulationError& e) {
    return fail("simulation", e.what() + std::string(" at t=") + std::to_string(e.time()));
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
