#pragma once

#include "mavnmpc/box.hpp"
#include "mavnmpc/oracle.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace mavnmpc {

struct SolverConfig {
  double tolerance = 1e-3;          // on the Euclidean norm of r = (u - T_gamma(u)) / gamma
  int max_iterations = 200;
  int memory = 10;                  // L-BFGS pairs; 0 disables quasi-Newton directions
  double cautious_epsilon = 1e-10;
  std::optional<double> initial_lipschitz;  // empty: finite-difference probe
  double gamma_factor = 0.95;       // gamma = gamma_factor / L
  double sigma_factor = 0.45;       // sigma = sigma_factor * gamma * (1 - gamma L)
  int max_line_search_halvings = 32;
  int max_lipschitz_backtracks = 64;  // doublings of L allowed over one solve
  double lipschitz_floor = 1e-3;
  std::uint64_t probe_seed = 0x5eed;

  void validate() const;
};

enum class SolverStatus { kConverged, kMaxIterations, kLineSearchFailure };

std::string_view toString(SolverStatus status);

struct SolverDiagnostics {
  int iterations = 0;
  SolverStatus status = SolverStatus::kMaxIterations;
  double cost = 0.0;
  double residual_norm = 0.0;      // ||r||_2 at the returned point
  double residual_inf = 0.0;       // ||r||_inf at the returned point
  double initial_residual_norm = 0.0;
  int cost_evaluations = 0;
  int gradient_evaluations = 0;
  int lipschitz_backtracks = 0;
  int lbfgs_rejections = 0;
  int fallback_steps = 0;
  double lipschitz = 0.0;
  double gamma = 0.0;
  double solve_time_s = 0.0;
  double avg_iteration_time_s = 0.0;
  std::int64_t lbfgs_multiplications = 0;  // scalar multiplications in direction + update
};

/// Per-accepted-iteration trace, for instrumentation and invariant checks.
struct IterationRecord {
  int iteration = 0;
  double gamma = 0.0;
  double sigma = 0.0;
  double lipschitz = 0.0;
  double residual_norm = 0.0;
  double fbe_before = 0.0;
  double fbe_after = 0.0;
  double tau = 0.0;
  bool fallback = false;
  std::int64_t lbfgs_multiplications = 0;
};

struct SolveResult {
  Eigen::VectorXd u;
  SolverDiagnostics diagnostics;
};

struct ProxGradStep {
  Eigen::VectorXd u_half;    // T_gamma(u)
  Eigen::VectorXd residual;  // (u - u_half) / gamma
};

/// u_half = proj_U(u - gamma grad), r = (u - u_half) / gamma.
ProxGradStep proxGradStep(const Eigen::VectorXd& u, const Eigen::VectorXd& grad, double gamma,
                          const BoxSet& box);

/// Forward-backward envelope
///   phi(u) - gamma/2 ||grad||^2 + 1/(2 gamma) dist_U^2(u - gamma grad).
double fbe(const Eigen::VectorXd& u, double phi, const Eigen::VectorXd& grad, double gamma, const BoxSet& box);

/// The same envelope from a computed residual: phi - gamma grad.r + gamma/2 ||r||^2.
/// Free of the cancellation in the form above when ||grad|| is large.
double fbeFromResidual(double phi, const Eigen::VectorXd& grad, const Eigen::VectorXd& residual, double gamma);

/// Limited-memory inverse-Hessian approximation stored as a ring of (s, y) pairs.
class LbfgsBuffer {
 public:
  LbfgsBuffer(int memory, Eigen::Index n);

  /// d = -H r by the two-loop recursion. Does not modify the buffer. When `mults`
  /// is given, the scalar multiplications performed are added to it.
  Eigen::VectorXd direction(const Eigen::VectorXd& r, std::int64_t* mults = nullptr) const;

  /// Stores (s, y) iff s.y / ||s||^2 > eps_d * residual_norm, evicting the oldest
  /// pair when full. Returns whether the pair was stored.
  bool update(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double residual_norm, double eps_d,
              std::int64_t* mults = nullptr);

  void clear() { size_ = 0; }
  int size() const { return size_; }
  int capacity() const { return memory_; }

 private:
  int slot(int age) const;  // age 0 = newest

  int memory_;
  int size_ = 0;
  int head_ = 0;  // next write position
  std::vector<Eigen::VectorXd> s_, y_;
  std::vector<double> rho_;
};

/// PANOC: projected-gradient steps blended with L-BFGS directions, globalized by a
/// line search on the forward-backward envelope, with Lipschitz backtracking.
class PanocSolver {
 public:
  using Observer = std::function<void(const IterationRecord&)>;

  explicit PanocSolver(SolverConfig cfg);

  /// Minimizes `problem` over `box` from `u0`. The returned point is T_gamma of the
  /// last iterate and therefore always lies in the box.
  SolveResult solve(CostOracle& problem, const BoxSet& box, const Eigen::VectorXd& u0,
                    const Observer& observer = {});

  const SolverConfig& config() const { return cfg_; }

 private:
  double estimateLipschitz(CostOracle& problem, const Eigen::VectorXd& u0, const Eigen::VectorXd& grad0,
                           SolverDiagnostics& diag);

  SolverConfig cfg_;
};

}  // namespace mavnmpc
