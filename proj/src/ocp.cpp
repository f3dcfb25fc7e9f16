#include "mavnmpc/ocp.hpp"

#include <limits>
#include <string>

namespace mavnmpc {
namespace {

double weightedSquaredNorm(const auto& d, const auto& w) { return d.cwiseProduct(d).dot(w); }

double stepTime(const OcpConfig& cfg, int k) { return cfg.t0 + k * cfg.sampling_period; }

// Adds the gradient of the obstacle penalty w.r.t. position to `grad_p`.
void addPenaltyGradient(const Eigen::Vector3d& p, const OcpConfig& cfg, double t, bool terminal,
                        Eigen::Ref<Eigen::Vector3d> grad_p) {
  Eigen::Vector3d g;
  for (const auto& obstacle : cfg.obstacles) {
    const double w = terminal ? obstacle.terminal_weight : obstacle.weight;
    for (std::size_t i = 0; i < cfg.corners.offsets.size(); ++i) {
      if (psiWithGradient(cfg.corners.corner(i, p), obstacle, t, g) > 0.0) grad_p += w * g;
    }
  }
}

std::optional<InputVector> previousInput(const ControlSequence& u, int k, const OcpConfig& cfg) {
  if (k == 0) return cfg.previous_input;
  return InputVector(inputBlock(u, k - 1));
}

void checkLength(const ControlSequence& u, const OcpConfig& cfg) {
  if (u.size() != cfg.decisionSize()) {
    throw std::invalid_argument("control sequence length " + std::to_string(u.size()) + " != 3N = " +
                                std::to_string(cfg.decisionSize()));
  }
}

void shootInto(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg,
               std::vector<StateVector>& states) {
  checkLength(u, cfg);
  states.resize(static_cast<std::size_t>(cfg.horizon) + 1);
  states[0] = x0;
  if (!x0.allFinite()) throw DivergedTrajectoryError(0, "initial state is not finite");
  for (int k = 0; k < cfg.horizon; ++k) {
    states[k + 1] = step(states[k], inputBlock(u, k), cfg.params, cfg.sampling_period, cfg.integrator);
    if (!states[k + 1].allFinite()) {
      throw DivergedTrajectoryError(k + 1, "non-finite state at prediction step " + std::to_string(k + 1));
    }
  }
}

double costFromStates(const std::vector<StateVector>& states, const ControlSequence& u, const OcpConfig& cfg) {
  double total = terminalCost(states[cfg.horizon], cfg);
  for (int k = 0; k < cfg.horizon; ++k) {
    total += stageCost(states[k], inputBlock(u, k), previousInput(u, k, cfg), k, cfg);
  }
  return total;
}

void adjointSweep(const std::vector<StateVector>& states, const ControlSequence& u, const OcpConfig& cfg,
                  Eigen::VectorXd& grad) {
  const int n_steps = cfg.horizon;
  grad.resize(cfg.decisionSize());

  StateVector lambda = 2.0 * cfg.weights.terminal.cwiseProduct(states[n_steps] - cfg.x_ref);
  addPenaltyGradient(states[n_steps].segment<3>(kPx), cfg, stepTime(cfg, n_steps), true,
                     lambda.segment<3>(kPx));

  for (int k = n_steps - 1; k >= 0; --k) {
    const StateVector& x = states[k];
    const InputVector uk = inputBlock(u, k);

    InputVector u_bar = 2.0 * cfg.weights.input.cwiseProduct(uk - cfg.u_ref);
    StateVector x_bar = stepVjp(x, uk, cfg.params, cfg.sampling_period, cfg.integrator, lambda, u_bar);

    x_bar += 2.0 * cfg.weights.state.cwiseProduct(x - cfg.x_ref);
    addPenaltyGradient(x.segment<3>(kPx), cfg, stepTime(cfg, k), false, x_bar.segment<3>(kPx));

    inputBlock(grad, k) = u_bar;
    lambda = x_bar;
  }

  // Input-rate penalty couples neighbouring blocks only.
  const InputVector& rate = cfg.weights.input_rate;
  if (rate.any()) {
    for (int k = 0; k < n_steps; ++k) {
      const auto prev = previousInput(u, k, cfg);
      if (!prev) continue;
      const InputVector d = 2.0 * rate.cwiseProduct(InputVector(inputBlock(u, k)) - *prev);
      inputBlock(grad, k) += d;
      if (k > 0) inputBlock(grad, k - 1) -= d;
    }
  }
}

}  // namespace

void CostWeights::validate() const {
  if ((state.array() < 0).any() || (input.array() < 0).any() || (terminal.array() < 0).any() ||
      (input_rate.array() < 0).any()) {
    throw std::invalid_argument("cost weights must be non-negative");
  }
}

void OcpConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(sampling_period > 0.0)) throw std::invalid_argument("sampling period must be positive");
  if (!(bounds.lower.array() <= bounds.upper.array()).all()) {
    throw std::invalid_argument("input bounds need lower <= upper");
  }
  if (x_ref.tail<kStateDim - 3>().any()) {
    throw std::invalid_argument("reference state must be [p_ref, 0, ..., 0]");
  }
  weights.validate();
  params.validate();
  corners.validate();
  for (const auto& o : obstacles) o.validate();
}

BoxSet OcpConfig::inputBox() const {
  BoxSet box{Eigen::VectorXd(decisionSize()), Eigen::VectorXd(decisionSize())};
  for (int k = 0; k < horizon; ++k) {
    box.lower.segment<kInputDim>(kInputDim * k) = bounds.lower;
    box.upper.segment<kInputDim>(kInputDim * k) = bounds.upper;
  }
  return box;
}

void OcpConfig::setPositionReference(const Eigen::Vector3d& p_ref) {
  x_ref.setZero();
  x_ref.segment<3>(kPx) = p_ref;
}

DivergedTrajectoryError::DivergedTrajectoryError(int step, const std::string& what)
    : std::runtime_error(what), step_(step) {}

double obstaclePenalty(const Eigen::Vector3d& p, const OcpConfig& cfg, double t, bool terminal) {
  double total = 0.0;
  for (const auto& obstacle : cfg.obstacles) {
    const double w = terminal ? obstacle.terminal_weight : obstacle.weight;
    for (std::size_t i = 0; i < cfg.corners.offsets.size(); ++i) {
      total += w * psi(cfg.corners.corner(i, p), obstacle, t);
    }
  }
  return total;
}

double stageCost(const StateVector& x, const InputVector& u, const std::optional<InputVector>& u_prev,
                 int k, const OcpConfig& cfg) {
  double cost = weightedSquaredNorm(x - cfg.x_ref, cfg.weights.state) +
                weightedSquaredNorm(u - cfg.u_ref, cfg.weights.input) +
                obstaclePenalty(x.segment<3>(kPx), cfg, stepTime(cfg, k), false);
  if (u_prev) cost += weightedSquaredNorm(u - *u_prev, cfg.weights.input_rate);
  return cost;
}

double terminalCost(const StateVector& x, const OcpConfig& cfg) {
  return weightedSquaredNorm(x - cfg.x_ref, cfg.weights.terminal) +
         obstaclePenalty(x.segment<3>(kPx), cfg, stepTime(cfg, cfg.horizon), true);
}

std::vector<StateVector> shoot(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg) {
  std::vector<StateVector> states;
  shootInto(u, x0, cfg, states);
  return states;
}

double totalCost(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg) {
  std::vector<StateVector> states;
  shootInto(u, x0, cfg, states);
  return costFromStates(states, u, cfg);
}

Eigen::VectorXd gradTotalCost(const ControlSequence& u, const StateVector& x0, const OcpConfig& cfg) {
  std::vector<StateVector> states;
  shootInto(u, x0, cfg, states);
  Eigen::VectorXd grad;
  adjointSweep(states, u, cfg, grad);
  return grad;
}

ShootingProblem::ShootingProblem(OcpConfig cfg, const StateVector& x0) : cfg_(std::move(cfg)), x0_(x0) {
  cfg_.validate();
  states_.reserve(static_cast<std::size_t>(cfg_.horizon) + 1);
}

// A diverged trial point is reported as +inf so that a line search can back off from it.
double ShootingProblem::value(const Eigen::VectorXd& u) {
  try {
    shootInto(u, x0_, cfg_, states_);
  } catch (const DivergedTrajectoryError&) {
    return std::numeric_limits<double>::infinity();
  }
  return costFromStates(states_, u, cfg_);
}

double ShootingProblem::valueAndGradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
  try {
    shootInto(u, x0_, cfg_, states_);
  } catch (const DivergedTrajectoryError&) {
    grad.setConstant(cfg_.decisionSize(), std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::infinity();
  }
  const double v = costFromStates(states_, u, cfg_);
  adjointSweep(states_, u, cfg_, grad);
  return v;
}

}  // namespace mavnmpc
