#include "pmelab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace pmelab {

namespace {

// out += div of face fluxes c_face * (w_R - w_L) / h^2 along every axis.
// Box faces carry zero flux: under the support guard this is identical to
// zero extension (w vanishes there anyway), and it keeps the conservation
// identity exact for epsilon-lifted full-box states. With c == 1 the interior
// is the compact second-difference stencil.
void add_flux_divergence(const Grid& g, const Field& c, const Field& w, Field& out) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  const int n = g.n;
  auto line = [&](const double* cv, const double* wv, double* ov, Eigen::Index stride) {
    double left = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      const Eigen::Index k = Eigen::Index(i) * stride;
      double right = 0.5 * (cv[k] + cv[k + stride]) * (wv[k + stride] - wv[k]);
      ov[k] += (right - left) * inv_h2;
      left = right;
    }
    ov[Eigen::Index(n - 1) * stride] += (0.0 - left) * inv_h2;
  };
  if (g.dim == 1) {
    line(c.data(), w.data(), out.data(), 1);
    return;
  }
  for (int iy = 0; iy < n; ++iy) {
    const Eigen::Index row = Eigen::Index(iy) * n;
    line(c.data() + row, w.data() + row, out.data() + row, 1);
  }
  for (int ix = 0; ix < n; ++ix) line(c.data() + ix, w.data() + ix, out.data() + ix, n);
}

double sup_abs_phi(const ProblemSpec& spec, const CellCoords& coords, double t, const Field& p) {
  Field phi = phi_of(spec, coords, t, p);
  return phi.abs().maxCoeff();
}

[[noreturn]] void throw_nonfinite(const Grid& g, const CellCoords& coords, const Field& u,
                                  double t) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      char buf[128];
      if (g.dim == 1)
        std::snprintf(buf, sizeof(buf), "non-finite density at cell %lld (x=%.6g) at t=%.9g",
                      static_cast<long long>(i), coords.x[i], t);
      else
        std::snprintf(buf, sizeof(buf),
                      "non-finite density at cell %lld (x=%.6g, y=%.6g) at t=%.9g",
                      static_cast<long long>(i), coords.x[i], coords.y[i], t);
      throw SolverError(buf);
    }
  }
  throw SolverError("non-finite density");
}

}  // namespace

double support_radius(const Grid& g, const Field& u) {
  double best = -1.0;
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i)
      if (u[i] > kSupportTol) best = std::max(best, std::abs(g.axis_coord(i)));
  } else {
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix)
        if (u[Eigen::Index(iy) * g.n + ix] > kSupportTol)
          best = std::max(best, std::hypot(g.axis_coord(ix), g.axis_coord(iy)));
  }
  return best < 0.0 ? 0.0 : best + 0.5 * g.h;
}

bool support_touches_guard_band(const Grid& g, const Field& u) {
  const int n = g.n;
  auto in_band = [n](int i) { return i < 4 || i >= n - 4; };
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i)
      if (in_band(i) && u[i] > kSupportTol) return true;
    return false;
  }
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      if ((in_band(ix) || in_band(iy)) && u[Eigen::Index(iy) * n + ix] > kSupportTol)
        return true;
  return false;
}

double stable_dt(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
                 const CoreCoefficients& coeffs, const State& state) {
  const double two_d = 2.0 * g.dim;
  Field v = state.u / coeffs.b;
  Field vm1 = pow_nonneg(v, state.m - 1.0);
  double diffusivity = (state.m * vm1 / coeffs.a).maxCoeff();
  double dt;
  if (diffusivity > 0.0)
    dt = spec.cfl * g.h * g.h / (two_d * diffusivity);
  else
    dt = spec.cfl * g.h * g.h * coeffs.a.minCoeff() / (two_d * state.m);
  Field p = state.m / (state.m - 1.0) * vm1;
  double phi_sup = sup_abs_phi(spec, coords, state.t, p);
  if (phi_sup > 0.0) dt = std::min(dt, 0.1 * coeffs.a.minCoeff() / phi_sup);
  return dt;
}

void step(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
          const CoreCoefficients& coeffs, double dt, State& state, StepStats& stats) {
  Field v = state.u / coeffs.b;
  Field vm1 = pow_nonneg(v, state.m - 1.0);
  Field vm = vm1 * v;

  Field rate = Field::Zero(state.u.size());
  add_flux_divergence(g, coeffs.b_over_a, vm, rate);

  Field p = state.m / (state.m - 1.0) * vm1;
  rate += state.u / coeffs.a * phi_of(spec, coords, state.t, p);

  state.u += dt * rate;
  if (!state.u.allFinite()) throw_nonfinite(g, coords, state.u, state.t + dt);

  const double vol = g.cell_volume();
  double clamped = -state.u.min(0.0).sum() * vol;
  if (clamped > 0.0) state.u = state.u.max(0.0);
  state.t += dt;

  stats.t = state.t;
  stats.dt = dt;
  stats.mass = state.u.sum() * vol;
  stats.sup_p = state.m / (state.m - 1.0) * vm1.maxCoeff();
  stats.support_radius = support_radius(g, state.u);
  stats.clamped_mass = clamped;

  if (spec.epsilon_lift == 0.0 && support_touches_guard_band(g, state.u))
    throw SolverError("support reached the 4-cell guard band at t=" + std::to_string(state.t));
}

double Trajectory::snapshot_dt() const {
  return states.size() > 1 ? states[1].t - states[0].t : 0.0;
}

Trajectory simulate(const ProblemSpec& spec, double m, const SimulateOptions& options) {
  spec.validate();
  if (!(m >= 2.0)) throw std::invalid_argument("simulate: m must be at least 2");

  Grid g = spec.make_grid();
  CellCoords coords(g);

  const expr::Expr& u0_expr = options.u0_override ? *options.u0_override : spec.u0_expr;
  Field u0 = u0_expr.eval(coords.env(0.0));
  if (u0.minCoeff() < -1e-12)
    throw SolverError("initial data is negative (min " + std::to_string(u0.minCoeff()) + ")");
  u0 = u0.max(0.0) + spec.epsilon_lift;

  State state{0.0, std::move(u0), m};
  if (spec.epsilon_lift == 0.0 && support_touches_guard_band(g, state.u))
    throw SolverError("initial support reaches the 4-cell guard band");

  Trajectory traj;
  traj.grid = g;
  traj.m = m;
  traj.epsilon_lift = spec.epsilon_lift;

  const bool coeffs_static =
      !spec.a_expr.references(expr::VarId::t) && !spec.b_expr.references(expr::VarId::t);
  CoreCoefficients coeffs = sample_core(spec, coords, 0.0);

  auto record_snapshot = [&]() {
    traj.states.push_back(state);
    traj.snapshot_support.push_back(support_radius(g, state.u));
  };
  record_snapshot();
  if (spec.horizon == 0.0) return traj;

  const double ceiling = spec.p_ceiling * 1.05;
  StepStats stats;
  for (int k = 1; k <= spec.snapshots; ++k) {
    const double target = spec.horizon * k / spec.snapshots;
    while (state.t < target) {
      if (!coeffs_static) coeffs = sample_core(spec, coords, state.t);
      double dt = stable_dt(spec, g, coords, coeffs, state);
      const double remaining = target - state.t;
      bool last = dt >= remaining * (1.0 - 1e-14);
      if (last) dt = remaining;
      step(spec, g, coords, coeffs, dt, state, stats);
      if (last) state.t = target;

      stats.t = state.t;
      traj.dts.push_back(dt);
      traj.max_pressure = std::max(traj.max_pressure, stats.sup_p);
      if (stats.mass > 0.0)
        traj.max_clamp_fraction =
            std::max(traj.max_clamp_fraction, stats.clamped_mass / stats.mass);
      if (stats.sup_p > ceiling) ++traj.ceiling_violations;
      if (options.sink) options.sink->on_step(stats);
      if (++traj.steps > options.max_steps)
        throw SolverError("step budget exhausted (" + std::to_string(options.max_steps) +
                          " steps); raise max_steps or shorten the horizon");
    }
    record_snapshot();
  }
  return traj;
}

ComparisonResult comparison_pair(const ProblemSpec& spec, double m, const expr::Expr& u0_low,
                                 const expr::Expr& u0_high) {
  Grid g = spec.make_grid();
  CellCoords coords(g);
  Field low = u0_low.eval(coords.env(0.0));
  Field high = u0_high.eval(coords.env(0.0));
  if ((low - high).maxCoeff() > 0.0)
    throw std::invalid_argument("comparison_pair: u0_low must not exceed u0_high");

  ComparisonResult result;
  SimulateOptions opts;
  opts.u0_override = &u0_low;
  result.low = simulate(spec, m, opts);
  opts.u0_override = &u0_high;
  result.high = simulate(spec, m, opts);

  double worst = 0.0;
  for (std::size_t k = 0; k < result.low.states.size(); ++k) {
    double v = (result.low.states[k].u - result.high.states[k].u).maxCoeff();
    worst = std::max(worst, v);
  }
  result.violation = std::max(0.0, worst);
  return result;
}

}  // namespace pmelab
