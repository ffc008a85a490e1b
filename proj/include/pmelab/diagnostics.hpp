#pragma once

#include "pmelab/problem.hpp"
#include "pmelab/solver.hpp"

#include <vector>

namespace pmelab {

struct FrontPoint {
  double t = 0.0;
  double position = 0.0;     // outermost crossing of p = level
  double v_measured = 0.0;   // centered difference of position
  double v_predicted = 0.0;  // |grad p| / a one cell inside the front
};

struct FrontSeries {
  double level = 0.0;
  std::vector<FrontPoint> points;
  // Sensitivity of the final position to the threshold choice.
  double final_position = 0.0;
  double final_position_level_x10 = 0.0;
  double final_position_level_div10 = 0.0;
};

/// Per-m record of every estimate the analysis bounds uniformly in m.
/// Space-time norms are snapshot-level trapezoids; d/dt quantities use
/// centered snapshot differences. Omega_T is realized as the full box (the
/// solver keeps the support away from the edge).
struct DiagnosticsRow {
  double m = 0.0;
  double ab_threshold = 0.0;
  bool below_ab_threshold = false;

  double sup_p = 0.0;
  double gradp_l2 = 0.0;           // || grad p ||_L2(Q_T)
  double gradp_l4 = 0.0;           // || grad p ||_L4(Omega_T)
  double lap_p_l1 = 0.0;           // || Delta p ||_L1(Omega_T)
  double wneg_l3 = 0.0;            // || |w|_- ||_L3(Omega_T)
  double dtu_l1 = 0.0;             // || d/dt u ||_L1
  double gradu_l1 = 0.0;           // || grad u ||_L1
  double dtp_l1 = 0.0;             // || d/dt p ||_L1
  double complementarity_l1 = 0.0; // || (1 - u/b) p ||_L1(Q_T)

  double max_clamp_fraction = 0.0;
  std::vector<double> support_radius;          // per snapshot
  std::vector<double> pressure_eq_residual;    // per interior snapshot
  FrontSeries front;

  /// Throws SolverError if any scalar is non-finite; serialization refuses
  /// to write NaN.
  void ensure_finite() const;
};

/// Pointwise constitutive pressure of a density snapshot.
Field pressure_field(const Field& u, const Field& b, double m);

/// w = Delta p + gamma . grad p + phi_tilde(p), built from the diagnostic
/// stencils; for constant coefficients it coincides with omega_field exactly.
Field w_field(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
              const CoefficientSet& c, const Field& p);

/// omega = div((b/a) grad p) + phi_bar(p).
Field omega_field(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
                  const CoefficientSet& c, const Field& p);

/// || (1 - u/b) p ||_L1(Q_T) over the whole trajectory.
double complementarity_residual(const Trajectory& traj, const ProblemSpec& spec);

/// Per-snapshot L1 norm of (pressure equation LHS - RHS); a consistency
/// telemetry, O(h) away from the free boundary with O(1) spikes at it.
std::vector<double> pressure_equation_residual(const Trajectory& traj, const ProblemSpec& spec);

/// Fills every norm of the report from a completed trajectory.
DiagnosticsRow estimate_norms(const Trajectory& traj, const ProblemSpec& spec);

/// Front position/velocity series at the given pressure level (default
/// 1e-3 p_M). 1D scans the positive-x front; 2D radial runs use the ray
/// along positive x nearest the axis. Empty series if p stays below level.
FrontSeries front_kinematics(const Trajectory& traj, const ProblemSpec& spec,
                             double level = -1.0);

}  // namespace pmelab
