#pragma once

#include <string>
#include <vector>

#include "meltctl/config.hpp"

namespace meltctl {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// Runs the first time step of `cfg` and checks the invariants of the computed
// solution: sign conditions, complementarity, optimality residuals, penalty
// decay along the path, J_gamma >= J, the control projection, and the reduced
// gradient against central differences.
std::vector<CheckResult> verify_first_step(const SimulationConfig& cfg);

}  // namespace meltctl
