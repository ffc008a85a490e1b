#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmelab/assumptions.hpp"
#include "pmelab/problem.hpp"

#include <cmath>
#include <random>

using namespace pmelab;

namespace {

ProblemSpec constants_spec() {
  ProblemSpec spec;
  spec.dim = 1;
  spec.half_width = 2.0;
  spec.n = 64;
  spec.horizon = 1.0;
  spec.a_expr = expr::Expr::parse("1");
  spec.b_expr = expr::Expr::parse("1");
  spec.phi_expr = expr::Expr::parse("1 - p");
  spec.u0_expr = expr::Expr::parse("0.5*max(1 - x^2, 0)");
  spec.lambda = 1.0;
  spec.p_ceiling = 1.0;
  spec.coeff_bound = 2.0;
  spec.tilde_lambda = 1.0;
  spec.m_list = {10.0, 40.0};
  return spec;
}

const AssumptionCheck& find(const AssumptionReport& report, const std::string& name) {
  for (const auto& c : report.checks)
    if (c.name == name) return c;
  REQUIRE(false);
  static AssumptionCheck dummy;
  return dummy;
}

}  // namespace

TEST_CASE("constitutive law examples") {
  CHECK(pressure_from_density(0.0, 1.0, 7.0) == 0.0);
  CHECK(pressure_from_density(0.5, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pressure_from_density(1.0, 1.0, 3.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(density_from_pressure(0.0, 1.0, 5.0) == 0.0);
  CHECK(density_from_pressure(1.0, 1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));

  double u = 0.73, b = 1.2, m = 5.0;
  double round = density_from_pressure(pressure_from_density(u, b, m), b, m);
  CHECK(std::abs(round - u) / u < 1e-12);
}

TEST_CASE("constitutive round trip is an exact inverse pair") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> du(0.0, 3.0);
  std::uniform_real_distribution<double> db(0.5, 2.0);
  std::uniform_real_distribution<double> dm(2.0, 90.0);
  for (int trial = 0; trial < 200; ++trial) {
    double u = du(rng), b = db(rng), m = dm(rng);
    double p = pressure_from_density(u, b, m);
    CHECK(p >= 0.0);
    double back = density_from_pressure(p, b, m);
    CHECK(std::abs(back - u) <= 1e-12 * std::max(1.0, u));
    double p2 = pressure_from_density(density_from_pressure(p, b, m), b, m);
    CHECK(std::abs(p2 - p) <= 1e-12 * std::max(1.0, p));
  }
}

TEST_CASE("pow_nonneg matches std::pow") {
  Field base(5);
  base << 0.0, 0.25, 0.9, 1.0, 1.5;
  for (double e : {0.0, 1.0, 2.0, 9.0, 39.0, 79.0, 2.5}) {
    Field fast = pow_nonneg(base, e);
    for (int i = 0; i < 5; ++i)
      CHECK(fast[i] == doctest::Approx(std::pow(base[i], e)).epsilon(1e-14));
  }
}

TEST_CASE("ab_m_threshold") {
  ProblemSpec spec = constants_spec();
  // Constant a: exactly 19/3, asserted against rational arithmetic.
  CHECK(ab_m_threshold(spec) == 19.0 / 3.0);

  // a ranging over [1/2, 2]: 1 + (2+1)/(1/2) * 8/3 = 17.
  // a ranging over [1/2, 2]: 1 + (2+1)/(1/2) * 8/3 = 17, up to the extrema
  // falling between sample points.
  ProblemSpec varying = constants_spec();
  varying.coeff_bound = 4.0;
  varying.a_expr = expr::Expr::parse("1.25 + 0.75*sin(pi*x/2)");
  double threshold = ab_m_threshold(varying);
  CHECK(threshold == doctest::Approx(17.0).epsilon(1e-3));

  // Monotone increasing in the constant level Lambda of a.
  double prev = 0.0;
  for (double level : {1.0, 1.5, 2.0, 4.0}) {
    ProblemSpec s = constants_spec();
    s.coeff_bound = 5.0;
    s.a_expr = expr::Expr::number(level);
    double th = ab_m_threshold(s);
    CHECK(th > prev);
    prev = th;
    CHECK(th >= 19.0 / 3.0);  // minimized at constant a
  }
}

TEST_CASE("derived coefficients match their definitions") {
  ProblemSpec spec = constants_spec();
  spec.a_expr = expr::Expr::parse("1 + 0.2*sin(x)");
  spec.b_expr = expr::Expr::parse("(1 + 0.1*x^2/8) * (1 + 0.1*tanh(t))");
  spec.coeff_bound = 3.0;
  Grid g = spec.make_grid();
  CellCoords coords(g);
  const double t = 0.3;
  CoefficientSet c = sample_coefficients(spec, coords, t);

  // Cross-check gamma, dt_b, dt_log_b, lap_log_ba against scalar finite
  // differences of the raw expressions.
  using expr::Expr;
  using expr::OpCode;
  Expr log_ba = Expr::unary(OpCode::fn_log, Expr::binary(OpCode::divide, spec.b_expr, spec.a_expr));
  Expr log_b = Expr::unary(OpCode::fn_log, spec.b_expr);
  // Batch evaluation uses Eigen's vectorized math, the scalar path libm; a
  // few-ulp disagreement divided by the probe step bounds the tolerances.
  for (int i : {0, 7, 31, 63}) {
    expr::Env env;
    env.x = coords.x[i];
    env.t = t;
    CHECK(std::abs(c.gamma.comp[0][i] -
                   expr::fd_derivative(log_ba, env, expr::VarId::x, 1)) < 1e-9);
    CHECK(std::abs(c.dt_b[i] -
                   expr::fd_derivative(spec.b_expr, env, expr::VarId::t, 1)) < 1e-9);
    CHECK(std::abs(c.dt_log_b[i] -
                   expr::fd_derivative(log_b, env, expr::VarId::t, 1)) < 1e-9);
    CHECK(std::abs(c.lap_log_ba[i] -
                   expr::fd_derivative(log_ba, env, expr::VarId::x, 2)) < 1e-4);
  }

  // phi_tilde and phi_bar against their definitions.
  Field p = Field::Constant(g.cells(), 0.4);
  Field phi = phi_of(spec, coords, t, p);
  Field tilde = phi_tilde(spec, c, coords, p);
  Field bar = phi_bar(spec, c, coords, p);
  CHECK((tilde - (phi - c.a * c.dt_log_b)).abs().maxCoeff() == 0.0);
  CHECK((bar - (c.b_over_a * phi - c.dt_b)).abs().maxCoeff() == 0.0);
  // For the time-independent-in-b limit the two coincide with phi.
}

TEST_CASE("assumption checker: constants pass") {
  AssumptionReport report = check_assumptions(constants_spec());
  for (const auto& c : report.checks) {
    CAPTURE(c.name);
    CHECK(c.pass);
  }
  CHECK(report.all_pass());
  CHECK(!report.notes.empty());  // the d/dt p0 omission is recorded
}

TEST_CASE("assumption checker: increasing phi fails with margin") {
  ProblemSpec spec = constants_spec();
  spec.phi_expr = expr::Expr::parse("p");
  AssumptionReport report = check_assumptions(spec);
  CHECK_FALSE(report.all_pass());
  const auto& mono = find(report, "A1-phi-monotone");
  CHECK_FALSE(mono.pass);
  // d(phi)/dp = +1 against the requirement <= -1: slack is -2.
  CHECK(mono.margin == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("assumption checker: A4 with b = exp(x^2/4)") {
  ProblemSpec spec = constants_spec();
  spec.b_expr = expr::Expr::parse("exp(x^2/4)");
  spec.u0_expr = expr::Expr::parse("0.5*max(1 - x^2, 0)");
  spec.coeff_bound = 3.0;  // exp(1) at the corners, plus slack
  spec.tilde_lambda = 0.4;
  AssumptionReport report = check_assumptions(spec);
  const auto& a4 = find(report, "A4-structural");
  CHECK(a4.pass);
  // Delta log b = 1/2 >= 0.4 - 1: margin 1.1.
  CHECK(a4.margin == doctest::Approx(1.1).epsilon(1e-5));
}

TEST_CASE("assumption checker: coefficient bound violations are located") {
  ProblemSpec spec = constants_spec();
  spec.a_expr = expr::Expr::parse("2.5");  // above Lambda = 2
  AssumptionReport report = check_assumptions(spec);
  const auto& bounds = find(report, "A1-coefficient-bounds");
  CHECK_FALSE(bounds.pass);
  CHECK(bounds.margin == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("assumption checker: initial data") {
  ProblemSpec spec = constants_spec();
  spec.u0_expr = expr::Expr::parse("0 - 0.1*max(1 - x^2, 0)");  // negative bump
  AssumptionReport negative = check_assumptions(spec);
  CHECK_FALSE(find(negative, "A2-initial-nonnegative").pass);

  ProblemSpec wide = constants_spec();
  wide.u0_expr = expr::Expr::parse("0.5");  // support fills the box
  AssumptionReport support = check_assumptions(wide);
  CHECK_FALSE(find(support, "A2-initial-support").pass);

  ProblemSpec hot = constants_spec();
  hot.u0_expr = expr::Expr::parse("1.5*max(1 - x^2, 0)");  // p(u0) above p_M for m=10
  AssumptionReport ceiling = check_assumptions(hot);
  CHECK_FALSE(find(ceiling, "A2-initial-pressure").pass);
}

TEST_CASE("assumption checker: 2D radial and growth clauses") {
  ProblemSpec spec = constants_spec();
  spec.dim = 2;
  spec.n = 16;
  spec.u0_expr = expr::Expr::parse("0.5*max(1 - r^2, 0)");
  spec.a_expr = expr::Expr::parse("1 + 0.25*exp(-r^2)");  // radial
  AssumptionReport radial = check_assumptions(spec);
  const auto& clause = find(radial, "A3-coefficient-structure");
  CHECK(clause.pass);
  CHECK(clause.detail.find("(ii)") != std::string::npos);

  // Non-radial but with b/a constant at infinity scale: clause (iii).
  ProblemSpec growth = constants_spec();
  growth.dim = 2;
  growth.n = 16;
  growth.u0_expr = expr::Expr::parse("0.5*max(1 - r^2, 0)");
  growth.b_expr = expr::Expr::parse("1 + 0.01*exp(-(x-0.3)^2 - y^2)");
  growth.coeff_bound = 2.0;
  AssumptionReport gr = check_assumptions(growth);
  const auto& gclause = find(gr, "A3-coefficient-structure");
  CHECK(gclause.detail.find("(iii)") != std::string::npos);
}

TEST_CASE("spec validation") {
  ProblemSpec spec = constants_spec();
  spec.m_list = {1.5};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = constants_spec();
  spec.cfl = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = constants_spec();
  spec.a_expr = expr::Expr::parse("1 + p");
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = constants_spec();
  spec.phi_expr = expr::Expr::parse("1 - p + y");  // y in a 1D problem
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
