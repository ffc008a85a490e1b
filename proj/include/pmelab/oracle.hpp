#pragma once

#include "pmelab/problem.hpp"
#include "pmelab/solver.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pmelab {

class OracleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Saturated pressure profile of the limit problem on [-R, R] with constant
/// coefficients and the linear growth law phi = lambda (p_M - p): the
/// two-point problem p'' = -phi(p), p(+-R) = 0, solved by shooting on p(0)
/// with p'(0) = 0 (RK4 at step R/4096, bisection to |p(R)| <= 1e-10).
struct SaturatedProfile {
  double radius = 0.0;
  double lambda = 1.0;
  double p_ceiling = 1.0;
  std::vector<double> x;  // 0 .. R
  std::vector<double> p;  // shooting solution
  double center_pressure = 0.0;  // p(0)
  double edge_slope = 0.0;       // p'(R) < 0

  /// p_M (1 - cosh(sqrt(lambda) x) / cosh(sqrt(lambda) R)), the closed form
  /// the shooting solution is cross-checked against.
  double closed_form(double at) const;
};

SaturatedProfile saturated_profile(double radius, double lambda, double p_ceiling);

/// Limit front speed p_M sqrt(lambda) tanh(sqrt(lambda) R) / a, i.e.
/// |p'(R)| / a with the closed-form edge slope.
double limit_front_speed(double radius, double a, double lambda, double p_ceiling);

struct FrontCurve {
  std::vector<double> t;
  std::vector<double> radius;
};

/// Integrates R' = limit_front_speed(R) by RK4 with dt = T/4096.
/// A zero horizon yields the single initial row.
FrontCurve front_ode(double r0, double a, double lambda, double p_ceiling, double horizon,
                     int steps = 4096);

struct CauchyRow {
  double m_low = 0.0;
  double m_high = 0.0;
  double du_l1 = 0.0;  // || u_high - u_low ||_L1(Q_T)
  double dp_l1 = 0.0;  // || p_high - p_low ||_L1(Q_T)
};

/// Pairwise L1(Q_T) distances between consecutive members of an m-sweep;
/// the fitted ratios are medians of successive-difference quotients and are
/// absent when fewer than three m values were run.
struct CauchyTable {
  std::vector<CauchyRow> rows;
  std::optional<double> ratio_u;
  std::optional<double> ratio_p;
};

/// All trajectories must share the grid and the snapshot times.
CauchyTable m_sweep(std::span<const Trajectory> runs, const ProblemSpec& spec);

}  // namespace pmelab
