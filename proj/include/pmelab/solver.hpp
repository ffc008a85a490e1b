#pragma once

#include "pmelab/problem.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pmelab {

class SolverError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Density at one instant.
struct State {
  double t = 0.0;
  Field u;
  double m = 2.0;
};

/// Per-step scalar diagnostics, matching the steps.csv columns.
struct StepStats {
  double t = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  double sup_p = 0.0;
  double support_radius = 0.0;
  double clamped_mass = 0.0;
};

/// Receives every accepted step; used by the CLI to stream steps.csv.
class StepSink {
 public:
  virtual ~StepSink() = default;
  virtual void on_step(const StepStats& stats) = 0;
};

/// Cells at or below this value do not count as support. The explicit scheme
/// carries denormal-scale dust one cell per step ahead of the front (fluxes
/// of v^m with v ~ 1e-3 are ~1e-240 for large m); measuring support at exact
/// zero would track that dust instead of the front.
constexpr double kSupportTol = 1e-12;

/// Outermost |cell center| + h/2 over cells with u > kSupportTol; 0 for an
/// empty field. Euclidean radius in 2D.
double support_radius(const Grid& g, const Field& u);

/// True if any cell within 4 cells of the box edge carries u > kSupportTol.
bool support_touches_guard_band(const Grid& g, const Field& u);

/// Largest stable explicit step at the current state:
///   cfl * h^2 / (2d * max_cells(m v^(m-1) / a)),   v = u/b,
/// falling back to cfl * h^2 * inf(a) / (2d m) for zero density, and
/// additionally capped so dt * sup|phi| / inf(a) <= 0.1.
double stable_dt(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
                 const CoreCoefficients& coeffs, const State& state);

/// One explicit finite-volume update of the density form
///   du/dt = div((b/a) grad (u/b)^m) + (u/a) phi(x, t, p(u)),
/// with face coefficients (b/a) averaged arithmetically, zero extension
/// outside the box, and coefficients frozen at the step's start time.
/// Negative undershoots are clamped to zero and recorded in stats.
/// Requires dt <= stable_dt.
void step(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
          const CoreCoefficients& coeffs, double dt, State& state, StepStats& stats);

struct SimulateOptions {
  std::uint64_t max_steps = 200'000'000;  // timeout guard
  StepSink* sink = nullptr;
  const expr::Expr* u0_override = nullptr;
};

struct Trajectory {
  Grid grid{1, 8, 1.0};
  double m = 2.0;
  double epsilon_lift = 0.0;
  std::vector<State> states;                  // snapshots, strictly increasing t
  std::vector<double> snapshot_support;       // support radius per snapshot
  std::vector<double> dts;                    // every accepted step
  std::uint64_t steps = 0;
  double max_pressure = 0.0;                  // sup over steps of sup_x p
  double max_clamp_fraction = 0.0;            // clamped mass / total mass
  int ceiling_violations = 0;                 // steps with sup p > 1.05 p_M

  double snapshot_dt() const;
};

/// Advance u0 + epsilon from 0 to T with adaptive stable steps, landing
/// exactly on the snapshot times k T / snapshots. The pressure ceiling
/// sup p <= 1.05 p_M is a soft check (violations counted); the support guard
/// band is a hard error unless epsilon_lift > 0, which fills the whole box
/// by construction. Callers are expected to have run the assumption checker
/// (or to have chosen to override it).
Trajectory simulate(const ProblemSpec& spec, double m, const SimulateOptions& options = {});

struct ComparisonResult {
  Trajectory low, high;
  double violation = 0.0;  // max over time and cells of max(0, u_low - u_high)
};

/// Runs the ordered pair and reports the worst pointwise comparison
/// violation. Requires u0_low <= u0_high on the grid.
ComparisonResult comparison_pair(const ProblemSpec& spec, double m, const expr::Expr& u0_low,
                                 const expr::Expr& u0_high);

}  // namespace pmelab
