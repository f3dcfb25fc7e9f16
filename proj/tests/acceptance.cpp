// Acceptance runner: evaluates every acceptance criterion and prints one PASS/FAIL
// line per criterion. Exit status is nonzero if any criterion fails.

#include "mavnmpc/gradcheck.hpp"
#include "mavnmpc/simulation.hpp"
#include "zoo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace mavnmpc;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome gradientAuditCriterion() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string per_horizon;
  for (int horizon : {1, 5, 40}) {
    ScenarioConfig s = ScenarioConfig::obstacleTraversal();
    s.horizon = horizon;
    const GradCheckReport report = gradientAudit(s, GradCheckOptions{100, 7});
    worst = std::max(worst, report.max_relative_error);
    per_horizon += fmt(" N=%d:%.2e", horizon, report.max_relative_error);
  }
  const double elapsed = secondsSince(start);
  return {worst < 1e-5 && elapsed < 30.0,
          fmt("max rel err %.2e (<1e-5),", worst) + per_horizon + fmt(", %.1f s (<30 s)", elapsed)};
}

// The obstacle-traversal run shared by criteria 2, 3 and 8.
struct TraversalRun {
  ScenarioConfig scenario = ScenarioConfig::obstacleTraversal();
  TrajectoryLog log;
  double elapsed = 0.0;
  std::string error;
};

TraversalRun& traversalRun() {
  static TraversalRun run = [] {
    TraversalRun r;
    const auto start = Clock::now();
    try {
      r.log = runClosedLoop(r.scenario, SimulationOptions{true, false});
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.elapsed = secondsSince(start);
    return r;
  }();
  return run;
}

Outcome traversalCriterion() {
  const TraversalRun& run = traversalRun();
  if (!run.error.empty()) return {false, "run aborted: " + run.error};
  const auto& refs = run.scenario.references;
  std::vector<int> reaches(refs.positions.size(), 0);
  std::vector<bool> inside(refs.positions.size(), false);
  double max_pen = 0.0, max_real = 0.0, min_axis = std::numeric_limits<double>::infinity();
  for (const auto& row : run.log.rows) {
    for (std::size_t i = 0; i < refs.positions.size(); ++i) {
      const bool now = (row.state.head<3>() - refs.positions[i]).norm() < refs.switch_radius;
      if (now && !inside[i]) ++reaches[i];
      inside[i] = now;
    }
    max_pen = std::max(max_pen, row.penetration);
    max_real = std::max(max_real, row.real_penetration);
    min_axis = std::min(min_axis, row.axis_distance);
  }
  const int fewest = *std::min_element(reaches.begin(), reaches.end());
  const bool pass = fewest >= 3 && max_pen <= 0.06 && max_real == 0.0 && run.elapsed < 120.0;
  return {pass, fmt("reaches %d/%d (>=3 each), max penetration %.4f m (<=0.06), real penetration %.4f m (=0), "
                    "min axis distance %.4f m, %.1f s (<120 s)",
                    reaches[0], reaches.size() > 1 ? reaches[1] : reaches[0], max_pen, max_real, min_axis,
                    run.elapsed)};
}

Outcome convergenceCriterion() {
  const TraversalRun& run = traversalRun();
  if (!run.error.empty()) return {false, "run aborted: " + run.error};
  const auto& rows = run.log.rows;
  int counted = 0, converged = 0, total_converged = 0, caps = 0, cap_then_cap = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool ok = rows[i].status == SolverStatus::kConverged;
    total_converged += ok;
    if (!ok) {
      ++caps;
      if (i + 1 < rows.size() && rows[i + 1].status != SolverStatus::kConverged) ++cap_then_cap;
    }
    if (rows[i].reference_switched) continue;
    ++counted;
    converged += ok;
  }
  const double share = static_cast<double>(converged) / std::max(1, counted);
  const double share_all = static_cast<double>(total_converged) / std::max<std::size_t>(1, rows.size());
  return {share >= 0.95 && cap_then_cap == 0,
          fmt("converged %.2f%% of non-switch ticks (>=95%%), %.2f%% of all ticks, %d capped ticks, "
              "%d capped ticks followed by another cap (=0)",
              100 * share, 100 * share_all, caps, cap_then_cap)};
}

SolveResult solveZoo(const zoo::Problem& p, int memory, const PanocSolver::Observer& observer = {}) {
  SolverConfig cfg;
  cfg.tolerance = 1e-8;
  cfg.max_iterations = 20000;
  cfg.memory = memory;
  PanocSolver solver(cfg);
  auto oracle = p.oracle();
  return solver.solve(oracle, p.box, p.start, observer);
}

Outcome zooCriterion() {
  double quad_err = 0.0, pg_err = 0.0;
  bool fewer = true;
  std::string counts;
  for (const auto& p : zoo::quadratics()) {
    const SolveResult panoc = solveZoo(p, 10);
    const SolveResult pg = solveZoo(p, 0);
    quad_err = std::max(quad_err, (panoc.u - p.solution).lpNorm<Eigen::Infinity>());
    pg_err = std::max(pg_err, (pg.u - p.solution).lpNorm<Eigen::Infinity>());
    fewer = fewer && panoc.diagnostics.iterations <= pg.diagnostics.iterations;
    counts += fmt(" %s:%d/%d", p.name.c_str(), panoc.diagnostics.iterations, pg.diagnostics.iterations);
  }
  const SolveResult rb = solveZoo(zoo::rosenbrock(), 10);
  const double rb_err = (rb.u - Eigen::Vector2d(1, 1)).lpNorm<Eigen::Infinity>();
  const bool pass = quad_err < 1e-6 && rb_err < 1e-6 && pg_err < 1e-6 && fewer;
  return {pass, fmt("quadratics %.1e, rosenbrock %.1e, projected gradient %.1e (all <1e-6); iterations panoc/pg",
                    quad_err, rb_err, pg_err) +
                    counts};
}

Outcome fbeCriterion() {
  // (a) envelope below the cost on the NMPC problem for random feasible inputs.
  const ScenarioConfig s = ScenarioConfig::obstacleTraversal();
  ShootingProblem problem(s.buildOcp(s.references.positions[1]), s.initial_state.toVector());
  const BoxSet box = problem.config().inputBox();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int below = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd u(box.size()), grad;
  for (int i = 0; i < 1000; ++i) {
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = box.lower[j] + unit(rng) * (box.upper[j] - box.lower[j]);
    const double phi = problem.valueAndGradient(u, grad);
    const double gamma = std::pow(10.0, -6.0 + 5.0 * unit(rng));
    const double env = fbe(u, phi, grad, gamma, box);
    worst_gap = std::max(worst_gap, env - phi);
    below += env <= phi;
  }

  // (b) sufficient decrease along every accepted iteration of the zoo.
  std::vector<zoo::Problem> problems = zoo::quadratics();
  problems.push_back(zoo::rosenbrock());
  long checked = 0, violated = 0;
  for (const auto& p : problems) {
    for (int memory : {0, 3, 10}) {
      solveZoo(p, memory, [&](const IterationRecord& rec) {
        ++checked;
        const double bound = rec.fbe_before - rec.sigma * rec.residual_norm * rec.residual_norm;
        if (!(rec.fbe_after <= bound + 1e-12 * std::max(1.0, std::abs(rec.fbe_before)))) ++violated;
      });
    }
  }

  // (c) tau = 0 reproduces the projected-gradient point bit for bit (dyadic data).
  std::uniform_int_distribution<int> grid(-4096, 4096);
  bool exact = true;
  const BoxSet unit_box{Eigen::VectorXd::Constant(30, -1.0), Eigen::VectorXd::Constant(30, 1.0)};
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v(30), g(30), d(30);
    for (int j = 0; j < 30; ++j) {
      v[j] = std::clamp(grid(rng) / 1024.0, -1.0, 1.0);
      g[j] = grid(rng) / 1024.0;
      d[j] = grid(rng) / 1024.0;
    }
    const double gamma = std::ldexp(1.0, trial % 7 - 3);
    const ProxGradStep step = proxGradStep(v, g, gamma, unit_box);
    const double tau = 0.0;
    const Eigen::VectorXd next = v - (1.0 - tau) * (gamma * step.residual) + tau * d;
    exact = exact && std::memcmp(next.data(), step.u_half.data(), sizeof(double) * 30) == 0;
  }
  return {below == 1000 && violated == 0 && checked > 0 && exact,
          fmt("envelope<=cost %d/1000 (max gap %.2e), sufficient decrease violated %ld/%ld, tau=0 identity %s",
              below, worst_gap, violated, checked, exact ? "exact" : "inexact")};
}

Outcome penaltyCriterion() {
  const ScenarioConfig s = ScenarioConfig::obstacleTraversal();
  std::vector<ObstacleSpec> obstacles = s.enlargedObstacles();
  {
    ObstacleSpec o;
    Ellipsoid e;
    e.center = {0.4, -0.2, 1.0};
    e.shape << 3, 0.5, 0.2, 0.5, 2, 0.1, 0.2, 0.1, 4;
    o.constraints = {e, Halfspace{{0.3, 1.0, -0.2}, 0.1}};
    obstacles.push_back(o);
  }

  // (a) and (b): a 50^3 grid over the workspace around both obstacles.
  long negative = 0, nonzero_outside = 0, inside = 0;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      for (int k = 0; k < 50; ++k) {
        const Eigen::Vector3d p(-1.5 + 3.0 * i / 49, -1.5 + 3.0 * j / 49, -0.5 + 3.0 * k / 49);
        for (const auto& o : obstacles) {
          const double v = psi(p, o);
          if (v < 0.0) ++negative;
          if (contains(o, p)) {
            ++inside;
          } else if (v != 0.0 || !gradPsi(p, o).isZero(0.0)) {
            ++nonzero_outside;
          }
        }
      }
    }
  }

  // (c) central differences at points drawn inside, outside and near the surfaces.
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.2, 1.2), z(-0.4, 2.6);
  double worst = 0.0;
  int interior_points = 0;
  for (int n = 0; n < 1000; ++n) {
    const ObstacleSpec& o = obstacles[n % obstacles.size()];
    const Eigen::Vector3d p(u(rng), u(rng), z(rng));
    if (contains(o, p)) ++interior_points;
    const Eigen::Vector3d g = gradPsi(p, o);
    Eigen::Vector3d fd;
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d a = p, b = p;
      a[c] += h;
      b[c] -= h;
      fd[c] = (psi(a, o) - psi(b, o)) / (2 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }

  // (d) boundary points of the enlarged cylinder and its slab faces.
  const ObstacleSpec& cyl = obstacles.front();
  int boundary_nonzero = 0;
  for (int n = 0; n < 200; ++n) {
    const double a = 2 * M_PI * n / 200.0;
    const Eigen::Vector3d side(0.75 * std::cos(a), 0.75 * std::sin(a), 0.1 + 2.0 * n / 200.0);
    const Eigen::Vector3d floor(0.5 * std::cos(a), 0.5 * std::sin(a), 0.0);
    const Eigen::Vector3d top(0.5 * std::cos(a), 0.5 * std::sin(a), 2.3);
    for (const auto& p : {side, floor, top}) {
      // Points on the curved face only lie on it up to rounding, so use the exact zero of h.
      if (contains(cyl, p)) continue;
      boundary_nonzero += psi(p, cyl) != 0.0 || !gradPsi(p, cyl).isZero(0.0);
    }
  }
  return {negative == 0 && nonzero_outside == 0 && worst < 1e-6 && boundary_nonzero == 0,
          fmt("psi<0 at %ld points, nonzero outside at %ld points (%ld interior samples), "
              "gradient rel err %.2e (<1e-6, %d interior probes), nonzero on boundary %d",
              negative, nonzero_outside, inside, worst, interior_points, boundary_nonzero)};
}

Outcome estimatorCriterion() {
  const EstimatorConfig cfg;
  const EstimatorState ex = ekfUpdate({15.0, 100.0}, 12.8, 0.8, cfg);
  const double ex_err = std::abs(ex.c_hat - 19.880840057385903);

  double worst_rel = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> signal(0.5, 0.9);
    std::normal_distribution<double> noise(0.0, 0.5);
    ThrustEstimator est(cfg);
    for (int k = 0; k < 200; ++k) {
      const double u = signal(rng);
      est.observe(20.0 * u * u + noise(rng), u);
    }
    worst_rel = std::max(worst_rel, std::abs(est.state().c_hat - 20.0) / 20.0);
  }

  double worst_lag = 0.0;
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> signal(0.5, 0.9);
    std::normal_distribution<double> noise(0.0, 0.5);
    ThrustEstimator est(cfg);
    for (int k = 0; k < 2000; ++k) {
      const double c_true = 22.0 - 4.0 * k / 1999.0;
      const double u = signal(rng);
      est.observe(c_true * u * u + noise(rng), u);
      if (k >= 200) worst_lag = std::max(worst_lag, std::abs(est.state().c_hat - c_true));
    }
  }

  const ScenarioConfig hover = ScenarioConfig::hoverBatteryDrain();
  double altitude_err = 0.0, early = 0.0, late = 0.0;
  std::string error;
  try {
    const TrajectoryLog log = runClosedLoop(hover, SimulationOptions{false, false});
    const std::size_t tenth = log.rows.size() / 10;
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      const auto& row = log.rows[i];
      altitude_err = std::max(altitude_err, std::abs(row.state[kPz] - hover.references.positions[0].z()));
      if (i < tenth) early += row.signal / tenth;
      if (i >= log.rows.size() - tenth) late += row.signal / tenth;
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  // Hover needs u_T = sqrt(g / C); require at least half of the increase the drift implies.
  const double g = hover.model.gravity;
  const double expected_rise = std::sqrt(g / hover.plant.thrust_constant.end) -
                               std::sqrt(g / hover.plant.thrust_constant.start);
  const bool pass = ex_err < 1e-9 && worst_rel < 0.02 && worst_lag < 0.5 && error.empty() && altitude_err < 0.1 &&
                    late - early > 0.5 * expected_rise;
  return {pass, fmt("worked example err %.1e (<1e-9), worst 10-seed error %.2f%% (<2%%), drift lag %.3f (<0.5), "
                    "hover altitude err %.4f m (<0.1), u_T %.4f -> %.4f (rise >= %.4f)",
                    ex_err, 100 * worst_rel, worst_lag, altitude_err, early, late, 0.5 * expected_rise) +
                    (error.empty() ? "" : ", hover aborted: " + error)};
}

Outcome performanceCriterion() {
  const TraversalRun& run = traversalRun();
  if (!run.error.empty()) return {false, "run aborted: " + run.error};
  double total = 0.0;
  for (const auto& row : run.log.rows) total += row.solve_time_s;
  const double mean_ms = 1e3 * total / std::max<std::size_t>(1, run.log.rows.size());

  // L-BFGS work of one iteration (a direction and an update) with a full buffer of
  // mu = 10 pairs, for the decision-vector sizes of horizons 10, 20 and 40.
  const int memory = 10;
  std::vector<double> sizes, mults;
  std::string per_size;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int n : {30, 60, 120}) {
    LbfgsBuffer buffer(memory, n);
    auto randomVector = [&] {
      Eigen::VectorXd v(n);
      for (auto& x : v) x = normal(rng);
      return v;
    };
    for (int k = 0; k < memory; ++k) {
      const Eigen::VectorXd s_k = randomVector();
      buffer.update(s_k, s_k + 0.1 * randomVector().cwiseAbs().cwiseProduct(s_k), 0.0, 1e-10);
    }
    if (buffer.size() != memory) return {false, fmt("could not fill the L-BFGS buffer at n=%d", n)};
    std::int64_t count = 0;
    buffer.direction(randomVector(), &count);
    const Eigen::VectorXd s_new = randomVector();
    buffer.update(s_new, 2.0 * s_new, 0.0, 1e-10, &count);
    sizes.push_back(n);
    mults.push_back(static_cast<double>(count));
    per_size += fmt(" n=%d:%lld", n, static_cast<long long>(count));
  }
  // Least-squares slope in log-log coordinates.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    mx += std::log(sizes[i]) / sizes.size();
    my += std::log(mults[i]) / sizes.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    sxy += (std::log(sizes[i]) - mx) * (std::log(mults[i]) - my);
    sxx += std::pow(std::log(sizes[i]) - mx, 2);
  }
  const double exponent = sxy / sxx;
  return {mean_ms < 50.0 && exponent < 1.2,
          fmt("mean solve time %.2f ms (<50 ms), L-BFGS multiplications per iteration at mu=%d", mean_ms, memory) + per_size +
              fmt(", fitted exponent %.3f (<1.2)", exponent)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinismCriterion() {
  const ScenarioConfig s = ScenarioConfig::obstacleTraversal();
  const auto dir = std::filesystem::temp_directory_path() / ("mavnmpc_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string error;
  bool same = false;
  try {
    exportCsv(runClosedLoop(s, {false, false}), dir / "a_traj.csv", dir / "a_diag.csv");
    exportCsv(runClosedLoop(s, {false, false}), dir / "b_traj.csv", dir / "b_diag.csv");
    same = slurp(dir / "a_traj.csv") == slurp(dir / "b_traj.csv") &&
           slurp(dir / "a_diag.csv") == slurp(dir / "b_diag.csv");
  } catch (const std::exception& e) {
    error = e.what();
  }
  const auto bytes = error.empty() ? std::filesystem::file_size(dir / "a_traj.csv") : 0;
  std::filesystem::remove_all(dir);
  if (!error.empty()) return {false, "run aborted: " + error};
  return {same, fmt("two runs with seed %llu: CSVs %s (%llu trajectory bytes)",
                    static_cast<unsigned long long>(s.seed), same ? "identical" : "differ",
                    static_cast<unsigned long long>(bytes))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient audit", gradientAuditCriterion},
      {"obstacle traversal", traversalCriterion},
      {"solver convergence profile", convergenceCriterion},
      {"solver correctness zoo", zooCriterion},
      {"envelope and line-search invariants", fbeCriterion},
      {"penalty suite", penaltyCriterion},
      {"estimator suite", estimatorCriterion},
      {"performance sanity", performanceCriterion},
      {"determinism", determinismCriterion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
