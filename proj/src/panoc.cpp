#include "mavnmpc/panoc.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace mavnmpc {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (memory < 0) throw std::invalid_argument("L-BFGS memory must be non-negative");
  if (!(gamma_factor > 0.0 && gamma_factor < 1.0)) throw std::invalid_argument("gamma_factor must lie in (0, 1)");
  if (!(sigma_factor > 0.0 && sigma_factor < 0.5)) throw std::invalid_argument("sigma_factor must lie in (0, 1/2)");
  if (initial_lipschitz && !(*initial_lipschitz > 0.0)) {
    throw std::invalid_argument("initial Lipschitz estimate must be positive");
  }
}

std::string_view toString(SolverStatus status) {
  switch (status) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kMaxIterations: return "max-iterations";
    case SolverStatus::kLineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

ProxGradStep proxGradStep(const Eigen::VectorXd& u, const Eigen::VectorXd& grad, double gamma,
                          const BoxSet& box) {
  ProxGradStep out;
  out.u_half = project(u - gamma * grad, box);
  out.residual = (u - out.u_half) / gamma;
  return out;
}

double fbe(const Eigen::VectorXd& u, double phi, const Eigen::VectorXd& grad, double gamma, const BoxSet& box) {
  return phi - 0.5 * gamma * grad.squaredNorm() + squaredDistance(u - gamma * grad, box) / (2.0 * gamma);
}

double fbeFromResidual(double phi, const Eigen::VectorXd& grad, const Eigen::VectorXd& residual, double gamma) {
  return phi - gamma * grad.dot(residual) + 0.5 * gamma * residual.squaredNorm();
}

// ---------------------------------------------------------------------------
// L-BFGS

LbfgsBuffer::LbfgsBuffer(int memory, Eigen::Index n)
    : memory_(memory),
      s_(static_cast<std::size_t>(memory), Eigen::VectorXd::Zero(n)),
      y_(static_cast<std::size_t>(memory), Eigen::VectorXd::Zero(n)),
      rho_(static_cast<std::size_t>(memory), 0.0) {
  if (memory < 0) throw std::invalid_argument("L-BFGS memory must be non-negative");
}

int LbfgsBuffer::slot(int age) const { return (head_ - 1 - age + 2 * memory_) % memory_; }

Eigen::VectorXd LbfgsBuffer::direction(const Eigen::VectorXd& r, std::int64_t* mults) const {
  if (size_ == 0) return -r;
  const auto n = r.size();
  Eigen::VectorXd q = r;
  std::vector<double> alpha(static_cast<std::size_t>(size_));
  for (int age = 0; age < size_; ++age) {
    const int i = slot(age);
    alpha[age] = rho_[i] * s_[i].dot(q);
    q -= alpha[age] * y_[i];
  }
  const int newest = slot(0);
  // H0 = (s.y / y.y) I from the newest pair; 1 / rho = s.y.
  q *= 1.0 / (rho_[newest] * y_[newest].squaredNorm());
  for (int age = size_ - 1; age >= 0; --age) {
    const int i = slot(age);
    const double beta = rho_[i] * y_[i].dot(q);
    q += (alpha[age] - beta) * s_[i];
  }
  if (mults) *mults += 4 * static_cast<std::int64_t>(size_) * n + 2 * n;
  return -q;
}

bool LbfgsBuffer::update(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double residual_norm, double eps_d,
                         std::int64_t* mults) {
  const double sy = s.dot(y);
  const double ss = s.squaredNorm();
  if (mults) *mults += 2 * s.size();
  if (memory_ == 0 || !(ss > 0.0) || !(sy / ss > eps_d * residual_norm)) return false;
  s_[head_] = s;
  y_[head_] = y;
  rho_[head_] = 1.0 / sy;
  head_ = (head_ + 1) % memory_;
  if (size_ < memory_) ++size_;
  return true;
}

// ---------------------------------------------------------------------------
// PANOC

namespace {

struct Point {
  Eigen::VectorXd u;
  double phi = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd u_half;
  Eigen::VectorXd r;
  double fbe = 0.0;

  void refresh(double gamma, const BoxSet& box) {
    u_half = project(u - gamma * grad, box);
    r = (u - u_half) / gamma;
    fbe = fbeFromResidual(phi, grad, r, gamma);
  }
};

// Rounding slack for comparisons of cost values that are equal in exact arithmetic.
double slack(double reference) { return 1e-12 * std::max(1.0, std::abs(reference)); }

}  // namespace

PanocSolver::PanocSolver(SolverConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

double PanocSolver::estimateLipschitz(CostOracle& problem, const Eigen::VectorXd& u0,
                                      const Eigen::VectorXd& grad0, SolverDiagnostics& diag) {
  if (cfg_.initial_lipschitz) return *cfg_.initial_lipschitz;
  std::mt19937_64 rng(cfg_.probe_seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd dir(u0.size());
  for (auto& d : dir) d = normal(rng);
  const double step = std::max(1e-6, 1e-6 * u0.norm());
  const Eigen::VectorXd delta = (step / dir.norm()) * dir;
  Eigen::VectorXd grad1;
  const double phi1 = problem.valueAndGradient(u0 + delta, grad1);
  ++diag.gradient_evaluations;
  if (!std::isfinite(phi1) || !grad1.allFinite()) return cfg_.lipschitz_floor;
  return std::max(cfg_.lipschitz_floor, (grad1 - grad0).norm() / delta.norm());
}

SolveResult PanocSolver::solve(CostOracle& problem, const BoxSet& box, const Eigen::VectorXd& u0,
                               const Observer& observer) {
  box.validate();
  if (u0.size() != box.size()) throw std::invalid_argument("initial guess and box sizes differ");
  if (!u0.allFinite()) throw std::invalid_argument("initial guess is not finite");

  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = u0.size();
  SolverDiagnostics diag;
  LbfgsBuffer buffer(cfg_.memory, n);

  Point cur;
  cur.u = u0;
  cur.phi = problem.valueAndGradient(cur.u, cur.grad);
  ++diag.gradient_evaluations;
  if (!std::isfinite(cur.phi) || !cur.grad.allFinite()) {
    throw std::invalid_argument("cost or gradient is not finite at the initial guess");
  }

  double lipschitz = estimateLipschitz(problem, cur.u, cur.grad, diag);
  double gamma = cfg_.gamma_factor / lipschitz;
  double sigma = cfg_.sigma_factor * gamma * (1.0 - gamma * lipschitz);
  cur.refresh(gamma, box);
  diag.initial_residual_norm = cur.r.norm();

  Point next;
  int iteration = 0;
  for (;; ++iteration) {
    if (cur.r.norm() < cfg_.tolerance) {
      diag.status = SolverStatus::kConverged;
      break;
    }
    if (iteration >= cfg_.max_iterations) {
      diag.status = SolverStatus::kMaxIterations;
      break;
    }

    // Lipschitz backtracking on the projected-gradient point.
    double phi_half = problem.value(cur.u_half);
    ++diag.cost_evaluations;
    int backtracks = 0;
    bool lipschitz_ok = true;
    while (!(phi_half <= cur.phi - gamma * cur.grad.dot(cur.r) +
                             0.5 * lipschitz * gamma * gamma * cur.r.squaredNorm() + slack(cur.phi))) {
      // L never shrinks within a solve, so this caps the growth of L over the whole
      // solve. Without a global cap a wrong gradient hides behind the rounding slack
      // once gamma is tiny, and the solver stalls instead of failing.
      if (diag.lipschitz_backtracks + backtracks >= cfg_.max_lipschitz_backtracks) {
        lipschitz_ok = false;
        break;
      }
      ++backtracks;
      buffer.clear();
      lipschitz *= 2.0;
      sigma *= 0.5;
      gamma *= 0.5;
      cur.refresh(gamma, box);
      phi_half = problem.value(cur.u_half);
      ++diag.cost_evaluations;
    }
    diag.lipschitz_backtracks += backtracks;
    if (!lipschitz_ok) {
      diag.status = SolverStatus::kLineSearchFailure;
      break;
    }

    std::int64_t mults = 0;
    const Eigen::VectorXd fpr = gamma * cur.r;  // R_gamma(u)
    const Eigen::VectorXd d = buffer.direction(fpr, &mults);
    const double required = cur.fbe - sigma * cur.r.squaredNorm();

    bool accepted = false;
    double tau = 1.0;
    for (int halving = 0; halving <= cfg_.max_line_search_halvings; ++halving, tau *= 0.5) {
      next.u = cur.u - (1.0 - tau) * fpr + tau * d;
      next.phi = problem.valueAndGradient(next.u, next.grad);
      ++diag.gradient_evaluations;
      if (!std::isfinite(next.phi) || !next.grad.allFinite()) continue;
      next.refresh(gamma, box);
      if (next.fbe <= required) {
        accepted = true;
        break;
      }
    }

    bool fallback = false;
    if (!accepted) {
      // tau = 0: the projected-gradient point, whose decrease follows from the
      // Lipschitz condition verified above.
      fallback = true;
      ++diag.fallback_steps;
      buffer.clear();
      tau = 0.0;
      next.u = cur.u_half;
      next.phi = problem.valueAndGradient(next.u, next.grad);
      ++diag.gradient_evaluations;
      if (!std::isfinite(next.phi) || !next.grad.allFinite()) {
        diag.status = SolverStatus::kLineSearchFailure;
        break;
      }
      next.refresh(gamma, box);
      if (!(next.fbe <= required + slack(cur.fbe))) {
        diag.status = SolverStatus::kLineSearchFailure;
        break;
      }
    }

    if (cfg_.memory > 0) {
      const Eigen::VectorXd s = next.u - cur.u;
      const Eigen::VectorXd y = gamma * (next.r - cur.r);
      mults += 2 * n;
      if (!buffer.update(s, y, gamma * next.r.norm(), cfg_.cautious_epsilon, &mults)) ++diag.lbfgs_rejections;
    }
    diag.lbfgs_multiplications += mults;

    if (observer) {
      IterationRecord rec;
      rec.iteration = iteration;
      rec.gamma = gamma;
      rec.sigma = sigma;
      rec.lipschitz = lipschitz;
      rec.residual_norm = cur.r.norm();
      rec.fbe_before = cur.fbe;
      rec.fbe_after = next.fbe;
      rec.tau = tau;
      rec.fallback = fallback;
      rec.lbfgs_multiplications = mults;
      observer(rec);
    }
    std::swap(cur, next);
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  diag.iterations = iteration;
  diag.cost = cur.phi;
  diag.residual_norm = cur.r.norm();
  diag.residual_inf = cur.r.lpNorm<Eigen::Infinity>();
  diag.lipschitz = lipschitz;
  diag.gamma = gamma;
  diag.solve_time_s = elapsed;
  diag.avg_iteration_time_s = elapsed / std::max(1, iteration);
  return {cur.u_half, diag};
}

}  // namespace mavnmpc
