#include "pmelab/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace pmelab {

void DiagnosticsRow::ensure_finite() const {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(sup_p) || bad(gradp_l2) || bad(gradp_l4) || bad(lap_p_l1) || bad(wneg_l3) ||
      bad(dtu_l1) || bad(gradu_l1) || bad(dtp_l1) || bad(complementarity_l1))
    throw SolverError("diagnostics report contains a non-finite norm");
  for (double v : support_radius)
    if (bad(v)) throw SolverError("non-finite support radius");
  for (double v : pressure_eq_residual)
    if (bad(v)) throw SolverError("non-finite pressure-equation residual");
  for (const auto& pt : front.points)
    if (bad(pt.position) || bad(pt.v_measured) || bad(pt.v_predicted))
      throw SolverError("non-finite front sample");
}

Field pressure_field(const Field& u, const Field& b, double m) {
  return pressure_from_density(u, b, m);
}

Field w_field(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
              const CoefficientSet& c, const Field& p) {
  VectorField gp = gradient(g, p);
  Field out = divergence(g, gp);  // laplacian, composed
  for (int axis = 0; axis < g.dim; ++axis) out += c.gamma.comp[axis] * gp.comp[axis];
  out += phi_tilde(spec, c, coords, p);
  return out;
}

Field omega_field(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
                  const CoefficientSet& c, const Field& p) {
  VectorField flux = gradient(g, p);
  for (int axis = 0; axis < g.dim; ++axis) flux.comp[axis] *= c.b_over_a;
  Field out = divergence(g, flux);
  out += phi_bar(spec, c, coords, p);
  return out;
}

namespace {

std::vector<double> snapshot_dts(const Trajectory& traj) {
  std::vector<double> dts;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k)
    dts.push_back(traj.states[k + 1].t - traj.states[k].t);
  return dts;
}

}  // namespace

double complementarity_residual(const Trajectory& traj, const ProblemSpec& spec) {
  CellCoords coords(traj.grid);
  const double vol = traj.grid.cell_volume();
  std::vector<double> integrals;
  for (const State& s : traj.states) {
    Field b = spec.b_expr.eval(coords.env(s.t));
    Field p = pressure_field(s.u, b, s.m);
    integrals.push_back((((1.0 - s.u / b) * p).abs()).sum() * vol);
  }
  return spacetime_accumulate(integrals, snapshot_dts(traj), 1);
}

std::vector<double> pressure_equation_residual(const Trajectory& traj, const ProblemSpec& spec) {
  std::vector<double> out;
  if (traj.states.size() < 3) return out;
  const Grid& g = traj.grid;
  CellCoords coords(g);

  std::vector<Field> pressures(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    Field b = spec.b_expr.eval(coords.env(traj.states[k].t));
    pressures[k] = pressure_field(traj.states[k].u, b, traj.m);
  }
  for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
    const double t = traj.states[k].t;
    const double span = traj.states[k + 1].t - traj.states[k - 1].t;
    CoefficientSet c = sample_coefficients(spec, coords, t);
    const Field& p = pressures[k];
    Field dpdt = (pressures[k + 1] - pressures[k - 1]) / span;
    Field lhs = dpdt - gradient(g, p).squared_magnitude() / c.a;
    Field rhs = (traj.m - 1.0) * (p / c.b) * omega_field(spec, g, coords, c, p);
    out.push_back(lp_norm(g, Field(lhs - rhs), 1));
  }
  return out;
}

DiagnosticsRow estimate_norms(const Trajectory& traj, const ProblemSpec& spec) {
  const Grid& g = traj.grid;
  CellCoords coords(g);
  const double vol = g.cell_volume();
  const std::size_t count = traj.states.size();

  DiagnosticsRow row;
  row.m = traj.m;
  row.ab_threshold = ab_m_threshold(spec);
  row.below_ab_threshold = traj.m < row.ab_threshold;
  row.sup_p = traj.max_pressure;
  row.max_clamp_fraction = traj.max_clamp_fraction;
  row.support_radius = traj.snapshot_support;

  std::vector<double> i_grad2(count), i_grad4(count), i_lap(count), i_wneg3(count),
      i_comp(count), i_gradu(count);
  std::vector<Field> pressures(count);

  for (std::size_t k = 0; k < count; ++k) {
    const State& s = traj.states[k];
    CoefficientSet c = sample_coefficients(spec, coords, s.t);
    Field p = pressure_field(s.u, c.b, s.m);
    pressures[k] = p;

    VectorField gp = gradient(g, p);
    Field gp2 = gp.squared_magnitude();
    i_grad2[k] = gp2.sum() * vol;
    i_grad4[k] = gp2.square().sum() * vol;
    i_lap[k] = divergence(g, gp).abs().sum() * vol;
    Field wneg = negative_part(w_field(spec, g, coords, c, p));
    i_wneg3[k] = wneg.cube().sum() * vol;
    i_comp[k] = ((1.0 - s.u / c.b) * p).abs().sum() * vol;
    i_gradu[k] = gradient(g, s.u).magnitude().sum() * vol;
  }

  auto dts = snapshot_dts(traj);
  row.gradp_l2 = spacetime_accumulate(i_grad2, dts, 2);
  row.gradp_l4 = spacetime_accumulate(i_grad4, dts, 4);
  row.lap_p_l1 = spacetime_accumulate(i_lap, dts, 1);
  row.wneg_l3 = spacetime_accumulate(i_wneg3, dts, 3);
  row.complementarity_l1 = spacetime_accumulate(i_comp, dts, 1);
  row.gradu_l1 = spacetime_accumulate(i_gradu, dts, 1);

  // Time derivatives from centered snapshot differences, integrated over the
  // interior snapshot window.
  if (count >= 3) {
    std::vector<double> i_dtu, i_dtp, inner_dts;
    for (std::size_t k = 1; k + 1 < count; ++k) {
      const double span = traj.states[k + 1].t - traj.states[k - 1].t;
      i_dtu.push_back(((traj.states[k + 1].u - traj.states[k - 1].u) / span).abs().sum() * vol);
      i_dtp.push_back(((pressures[k + 1] - pressures[k - 1]) / span).abs().sum() * vol);
      if (k + 2 < count) inner_dts.push_back(traj.states[k + 1].t - traj.states[k].t);
    }
    row.dtu_l1 = spacetime_accumulate(i_dtu, inner_dts, 1);
    row.dtp_l1 = spacetime_accumulate(i_dtp, inner_dts, 1);
  }

  row.pressure_eq_residual = pressure_equation_residual(traj, spec);
  row.front = front_kinematics(traj, spec);
  row.ensure_finite();
  return row;
}

namespace {

// Outermost crossing of p = level along a line of n samples (stride-1),
// scanning from the right; linear interpolation between cell centers.
// Returns the crossing index in *inside (the last cell at or above level),
// or false if the line never reaches the level.
bool scan_front(const double* p, int n, double level, double x0, double h, double* position,
                int* inside) {
  for (int i = n - 1; i >= 0; --i) {
    if (p[i] >= level) {
      if (i == n - 1) {
        *position = x0 + i * h;
      } else {
        double frac = (p[i] - level) / (p[i] - p[i + 1]);
        *position = x0 + i * h + frac * h;
      }
      *inside = i;
      return true;
    }
  }
  return false;
}

}  // namespace

FrontSeries front_kinematics(const Trajectory& traj, const ProblemSpec& spec, double level) {
  const Grid& g = traj.grid;
  CellCoords coords(g);
  if (level <= 0.0) level = 1e-3 * spec.p_ceiling;

  FrontSeries series;
  series.level = level;

  // The scan line: the whole axis in 1D, the positive-x ray nearest the axis
  // in 2D (radial runs).
  const int row = g.n / 2;
  const Eigen::Index line_start = g.dim == 1 ? 0 : Eigen::Index(row) * g.n;

  double last_pos10 = 0.0, last_pos01 = 0.0;
  for (const State& s : traj.states) {
    Field b = spec.b_expr.eval(coords.env(s.t));
    Field a = spec.a_expr.eval(coords.env(s.t));
    Field p = pressure_field(s.u, b, s.m);

    double position = 0.0;
    int inside = 0;
    if (!scan_front(p.data() + line_start, g.n, level, g.axis_coord(0), g.h, &position, &inside))
      continue;

    FrontPoint pt;
    pt.t = s.t;
    pt.position = position;
    Eigen::Index cell = line_start + std::max(0, inside - 1);
    pt.v_predicted = gradient(g, p).magnitude()[cell] / a[cell];
    series.points.push_back(pt);

    double alt = 0.0;
    int alt_inside = 0;
    if (scan_front(p.data() + line_start, g.n, level * 10.0, g.axis_coord(0), g.h, &alt,
                   &alt_inside))
      last_pos10 = alt;
    if (scan_front(p.data() + line_start, g.n, level / 10.0, g.axis_coord(0), g.h, &alt,
                   &alt_inside))
      last_pos01 = alt;
  }

  auto& pts = series.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts.size() < 2) break;
    std::size_t lo = k == 0 ? 0 : k - 1;
    std::size_t hi = k + 1 == pts.size() ? k : k + 1;
    pts[k].v_measured = (pts[hi].position - pts[lo].position) / (pts[hi].t - pts[lo].t);
  }
  if (!pts.empty()) series.final_position = pts.back().position;
  series.final_position_level_x10 = last_pos10;
  series.final_position_level_div10 = last_pos01;
  return series;
}

}  // namespace pmelab
