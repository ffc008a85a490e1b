#pragma once

#include "pmelab/problem.hpp"

#include <string>
#include <vector>

namespace pmelab {

/// One verified condition. margin >= -tol means pass; margin is the signed
/// slack to the constraint (positive is comfortable, negative violates).
struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string worst_point;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> notes;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Numerical verification of the structural hypotheses on a refinement of the
/// run grid (2x resolution, 9 time slices, 9 pressure levels in [0, p_M]),
/// with absolute tolerance 1e-6. Derivative bounds are checked up to order 2
/// only; orders 3-4 are not consumed by any computed quantity and are
/// unreliable in double precision at the probing step.
AssumptionReport check_assumptions(const ProblemSpec& spec);

}  // namespace pmelab
