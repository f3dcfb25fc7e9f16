#pragma once

#include "mavnmpc/scenario.hpp"

#include <cstdint>

namespace mavnmpc {

struct GradCheckOptions {
  int probes = 100;
  std::uint64_t seed = 7;
  double relative_step = 1e-5;  // h_i = relative_step * max(1, |u_i|)
};

struct GradCheckReport {
  int probes = 0;
  /// max over probes and components of |g_adj - g_fd| / max(1, |g_fd|).
  double max_relative_error = 0.0;
};

/// Central-difference audit of the adjoint gradient on random initial states and
/// input sequences drawn around the scenario's workspace.
GradCheckReport gradientAudit(const ScenarioConfig& scenario, const GradCheckOptions& options = {});

}  // namespace mavnmpc
