#include "mavnmpc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mavnmpc {

GradCheckReport gradientAudit(const ScenarioConfig& scenario, const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Sample positions over the box spanned by the references, padded by 1 m, so that
  // probes land both inside and outside the obstacles.
  Eigen::Vector3d lo = scenario.initial_state.p, hi = scenario.initial_state.p;
  for (const auto& p : scenario.references.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lo -= Eigen::Vector3d::Constant(1.0);
  hi += Eigen::Vector3d::Constant(1.0);

  GradCheckReport report;
  for (int probe = 0; probe < options.probes; ++probe) {
    StateVector x0;
    for (int i = 0; i < 3; ++i) x0[kPx + i] = uniform(lo[i], hi[i]);
    for (int i = 0; i < 3; ++i) x0[kVx + i] = uniform(-1.0, 1.0);
    x0[kRoll] = uniform(-0.3, 0.3);
    x0[kPitch] = uniform(-0.3, 0.3);

    const OcpConfig cfg = scenario.buildOcp(scenario.references.positions[probe % scenario.references.positions.size()]);
    const BoxSet box = cfg.inputBox();
    Eigen::VectorXd u(cfg.decisionSize());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = uniform(box.lower[i], box.upper[i]);

    const Eigen::VectorXd adjoint = gradTotalCost(u, x0, cfg);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double h = options.relative_step * std::max(1.0, std::abs(u[i]));
      Eigen::VectorXd up = u, down = u;
      up[i] += h;
      down[i] -= h;
      const double fd = (totalCost(up, x0, cfg) - totalCost(down, x0, cfg)) / (2.0 * h);
      const double err = std::abs(adjoint[i] - fd) / std::max(1.0, std::abs(fd));
      report.max_relative_error = std::max(report.max_relative_error, err);
    }
    ++report.probes;
  }
  return report;
}

}  // namespace mavnmpc
