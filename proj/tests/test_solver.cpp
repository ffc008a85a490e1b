#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmelab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <string>

using namespace pmelab;

namespace {

// Closed-form source-free self-similar solution in 1D, the solver-accuracy
// oracle: u(x,t) = t^-k (C - beta x^2 t^-2k)_+^(1/(m-1)), k = 1/(m+1),
// beta = k(m-1)/(2m).
double barenblatt_1d(double x, double t, double m, double C) {
  double k = 1.0 / (m + 1.0);
  double beta = k * (m - 1.0) / (2.0 * m);
  double s = C - beta * x * x * std::pow(t, -2.0 * k);
  return s > 0.0 ? std::pow(t, -k) * std::pow(s, 1.0 / (m - 1.0)) : 0.0;
}

std::string barenblatt_expr(double m, double C, double t0) {
  double k = 1.0 / (m + 1.0);
  double beta = k * (m - 1.0) / (2.0 * m);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "max(%.17g - x^2 * %.17g, 0) ^ %.17g * %.17g", C,
                beta * std::pow(t0, -2.0 * k), 1.0 / (m - 1.0), std::pow(t0, -k));
  return buf;
}

ProblemSpec base_spec() {
  ProblemSpec spec;
  spec.dim = 1;
  spec.half_width = 2.0;
  spec.n = 256;
  spec.horizon = 1.0;
  spec.a_expr = expr::Expr::parse("1");
  spec.b_expr = expr::Expr::parse("1");
  spec.phi_expr = expr::Expr::parse("1 - p");
  spec.u0_expr = expr::Expr::parse("0.9*min(1, 1.5*max(1 - (x/0.3)^2, 0))");
  spec.lambda = 1.0;
  spec.p_ceiling = 1.0;
  spec.coeff_bound = 2.0;
  spec.tilde_lambda = 1.0;
  spec.m_list = {10.0, 20.0, 40.0, 80.0};
  return spec;
}

ProblemSpec source_free_spec(double m, double C, double t0, double L, int n) {
  ProblemSpec spec = base_spec();
  spec.half_width = L;
  spec.n = n;
  spec.phi_expr = expr::Expr::parse("0");
  spec.u0_expr = expr::Expr::parse(barenblatt_expr(m, C, t0));
  spec.m_list = {m};
  spec.p_ceiling = 10.0;  // the ceiling plays no role without growth
  return spec;
}

double barenblatt_l1_error(int n, double m, double T_sim) {
  const double C = 0.5, t0 = 0.1, L = 3.0;
  ProblemSpec spec = source_free_spec(m, C, t0, L, n);
  spec.horizon = T_sim;
  Trajectory traj = simulate(spec, m);
  const Field& u = traj.states.back().u;
  Grid g = spec.make_grid();
  double err = 0.0, norm = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double exact = barenblatt_1d(g.axis_coord(i), t0 + T_sim, m, C);
    err += std::abs(u[i] - exact);
    norm += std::abs(exact);
  }
  return err / norm;
}

}  // namespace

TEST_CASE("stable_dt: fallback, direct formula, scaling in a") {
  // u == 0: dt = cfl h^2 inf(a) / (2d m).
  ProblemSpec spec = base_spec();
  spec.n = 200;
  spec.half_width = 1.0;
  spec.phi_expr = expr::Expr::parse("0");
  Grid g = spec.make_grid();
  CellCoords coords(g);
  CoreCoefficients coeffs = sample_core(spec, coords, 0.0);
  State zero{0.0, g.zeros(), 2.0};
  CHECK(stable_dt(spec, g, coords, coeffs, zero) ==
        doctest::Approx(0.5 * g.h * g.h / (2.0 * 2.0)).epsilon(1e-12));

  // d=1, a=b=1, m=2, max u = 1, h = 0.01, cfl = 0.5, phi = 0: dt = 1.25e-5.
  State bump{0.0, g.zeros(), 2.0};
  bump.u[g.n / 2] = 1.0;
  CHECK(g.h == doctest::Approx(0.01));
  CHECK(stable_dt(spec, g, coords, coeffs, bump) == doctest::Approx(1.25e-5).epsilon(1e-12));

  // Doubling a doubles dt when diffusion-limited.
  ProblemSpec doubled = spec;
  doubled.a_expr = expr::Expr::parse("2");
  CoreCoefficients coeffs2 = sample_core(doubled, coords, 0.0);
  CHECK(stable_dt(doubled, g, coords, coeffs2, bump) ==
        doctest::Approx(2.5e-5).epsilon(1e-12));
}

TEST_CASE("stable_dt: reaction cap") {
  ProblemSpec spec = base_spec();
  spec.phi_expr = expr::Expr::parse("100 - p");  // huge growth rate at p = 0
  spec.n = 64;
  Grid g = spec.make_grid();
  CellCoords coords(g);
  CoreCoefficients coeffs = sample_core(spec, coords, 0.0);
  State zero{0.0, g.zeros(), 2.0};
  // sup|phi| = 100, inf a = 1: dt <= 0.1/100.
  CHECK(stable_dt(spec, g, coords, coeffs, zero) <= 1e-3 * (1.0 + 1e-12));
}

TEST_CASE("step: zero density is a fixed point") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  Grid g = spec.make_grid();
  CellCoords coords(g);
  CoreCoefficients coeffs = sample_core(spec, coords, 0.0);
  State state{0.0, g.zeros(), 10.0};
  StepStats stats;
  step(spec, g, coords, coeffs, 1e-4, state, stats);
  CHECK(state.u.abs().maxCoeff() == 0.0);
  CHECK(stats.mass == 0.0);
}

TEST_CASE("step: spatially constant state is stationary without growth") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  spec.phi_expr = expr::Expr::parse("0");
  spec.epsilon_lift = 0.1;  // constant states need the guard disabled
  spec.u0_expr = expr::Expr::parse("0.2");
  Grid g = spec.make_grid();
  CellCoords coords(g);
  CoreCoefficients coeffs = sample_core(spec, coords, 0.0);
  State state{0.0, Field(Field::Constant(g.cells(), 0.3)), 10.0};
  StepStats stats;
  step(spec, g, coords, coeffs, 1e-5, state, stats);
  CHECK((state.u - 0.3).abs().maxCoeff() == 0.0);
}

TEST_CASE("simulate: T = 0 yields only the initial state") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  spec.horizon = 0.0;
  Trajectory traj = simulate(spec, 10.0);
  CHECK(traj.states.size() == 1);
  CHECK(traj.states[0].t == 0.0);
  CHECK(traj.steps == 0);
}

TEST_CASE("simulate: snapshot times are exact and increasing") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  spec.horizon = 0.25;
  spec.snapshots = 8;
  Trajectory traj = simulate(spec, 4.0);
  REQUIRE(traj.states.size() == 9);
  for (int k = 0; k <= 8; ++k)
    CHECK(traj.states[k].t == 0.25 * k / 8);
}

TEST_CASE("simulate: mass conservation without growth") {
  const double C = 0.5, t0 = 0.1;
  ProblemSpec spec = source_free_spec(2.0, C, t0, 3.0, 128);
  spec.horizon = 1.0;
  Trajectory traj = simulate(spec, 2.0);
  Grid g = spec.make_grid();
  double before = traj.states.front().u.sum() * g.cell_volume();
  double after = traj.states.back().u.sum() * g.cell_volume();
  CHECK(std::abs(after - before) / before < 1e-10);
  CHECK(traj.max_clamp_fraction < 1e-12);
}

TEST_CASE("simulate: Barenblatt oracle at n=256 within 2 percent") {
  double err = barenblatt_l1_error(256, 2.0, 0.9);
  CHECK(err < 0.02);
}

TEST_CASE("simulate: mass balance with source within 2 percent") {
  ProblemSpec spec = base_spec();
  spec.horizon = 0.5;
  double m = 10.0;
  Trajectory traj = simulate(spec, m);
  Grid g = spec.make_grid();
  CellCoords coords(g);
  // Compare the mass increments between snapshots with the time-trapezoid of
  // the source integral.
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    auto source_integral = [&](const State& s) {
      CoreCoefficients c = sample_core(spec, coords, s.t);
      Field p = pressure_from_density(s.u, c.b, m);
      return (s.u / c.a * phi_of(spec, coords, s.t, p)).sum() * g.cell_volume();
    };
    double dm = (traj.states[k + 1].u - traj.states[k].u).sum() * g.cell_volume();
    double dt = traj.states[k + 1].t - traj.states[k].t;
    double src = 0.5 * dt * (source_integral(traj.states[k]) + source_integral(traj.states[k + 1]));
    worst = std::max(worst, std::abs(dm - src) / dt);
  }
  CHECK(worst < 0.02);  // relative to unit time and O(1) mass
}

TEST_CASE("simulate: pressure stays under the ceiling") {
  ProblemSpec spec = base_spec();
  Trajectory traj = simulate(spec, 40.0);
  CHECK(traj.max_pressure <= 1.02);
  CHECK(traj.ceiling_violations == 0);
}

TEST_CASE("simulate: positivity and finite propagation") {
  ProblemSpec spec = base_spec();
  spec.horizon = 0.5;
  Trajectory traj = simulate(spec, 20.0);
  for (const State& s : traj.states) CHECK(s.u.minCoeff() >= 0.0);
  CHECK(traj.max_clamp_fraction < 1e-12);
  for (std::size_t k = 0; k + 1 < traj.snapshot_support.size(); ++k)
    CHECK(traj.snapshot_support[k] <= traj.snapshot_support[k + 1] + 1e-12);
  // Linear-in-time envelope with a finite constant.
  double dr = traj.snapshot_support.back() - traj.snapshot_support.front();
  CHECK(dr / spec.horizon < 5.0);
}

TEST_CASE("simulate: initial support in the guard band is rejected") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  spec.u0_expr = expr::Expr::parse("0.5");
  CHECK_THROWS_AS(simulate(spec, 10.0), SolverError);
}

TEST_CASE("simulate: step budget guard") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  SimulateOptions opts;
  opts.max_steps = 10;
  CHECK_THROWS_AS(simulate(spec, 10.0, opts), SolverError);
}

TEST_CASE("simulate: epsilon lift is applied and conserved without growth") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  spec.horizon = 0.01;
  spec.phi_expr = expr::Expr::parse("0");
  spec.epsilon_lift = 1e-3;
  Trajectory traj = simulate(spec, 4.0);
  CHECK(traj.states.front().u.minCoeff() == 1e-3);
  Grid g = spec.make_grid();
  double before = traj.states.front().u.sum() * g.cell_volume();
  double after = traj.states.back().u.sum() * g.cell_volume();
  CHECK(std::abs(after - before) / before < 1e-10);
}

TEST_CASE("comparison_pair: identical data and zero data") {
  ProblemSpec spec = base_spec();
  spec.n = 128;
  spec.horizon = 0.1;
  expr::Expr u0 = expr::Expr::parse("0.8*max(1 - (x/0.3)^2, 0)^2");
  ComparisonResult same = comparison_pair(spec, 10.0, u0, u0);
  CHECK(same.violation == 0.0);

  expr::Expr zero = expr::Expr::parse("0");
  ComparisonResult vs_zero = comparison_pair(spec, 10.0, zero, u0);
  CHECK(vs_zero.violation == 0.0);
  CHECK(vs_zero.low.states.back().u.abs().maxCoeff() == 0.0);  // zero stays zero
}

TEST_CASE("comparison_pair: ordered bumps stay ordered") {
  ProblemSpec spec = base_spec();
  spec.horizon = 0.5;
  expr::Expr low = expr::Expr::parse("0.8*max(1 - (x/0.3)^2, 0)^2");
  expr::Expr high = expr::Expr::parse("0.9*max(1 - (x/0.3)^2, 0)^2");
  ComparisonResult result = comparison_pair(spec, 10.0, low, high);
  CHECK(result.violation <= 1e-8);
}

TEST_CASE("comparison_pair: rejects unordered data") {
  ProblemSpec spec = base_spec();
  spec.n = 64;
  expr::Expr low = expr::Expr::parse("0.9*max(1 - (x/0.3)^2, 0)");
  expr::Expr high = expr::Expr::parse("0.8*max(1 - (x/0.3)^2, 0)");
  CHECK_THROWS_AS(comparison_pair(spec, 10.0, low, high), std::invalid_argument);
}
