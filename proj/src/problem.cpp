#include "pmelab/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace pmelab {

void ProblemSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ProblemSpec: " + msg); };
  if (dim != 1 && dim != 2) fail("dim must be 1 or 2");
  if (!(half_width > 0.0)) fail("L must be strictly positive");
  if (n < 8) fail("n must be at least 8");
  if (!(horizon >= 0.0)) fail("T must be non-negative");
  if (!(lambda > 0.0)) fail("lambda must be strictly positive");
  if (!(p_ceiling > 0.0)) fail("p_M must be strictly positive");
  if (!(coeff_bound >= 1.0)) fail("Lambda must be at least 1");
  if (!(tilde_lambda > 0.0)) fail("tilde_lambda must be strictly positive");
  if (m_list.empty()) fail("m_list must not be empty");
  for (double m : m_list)
    if (!(m >= 2.0)) fail("every m must be at least 2");
  if (!(epsilon_lift >= 0.0)) fail("epsilon_lift must be non-negative");
  if (!(cfl > 0.0 && cfl <= 1.0)) fail("cfl must lie in (0, 1]");
  if (snapshots < 1) fail("snapshots must be at least 1");
  if (a_expr.empty() || b_expr.empty() || phi_expr.empty())
    fail("a, b and phi expressions are all required");
  if (u0_expr.empty() == u0_pressure_expr.empty())
    fail("exactly one of u0 and u0_pressure must be given");
  const expr::Expr& init = u0_expr.empty() ? u0_pressure_expr : u0_expr;
  for (const auto* e : {&a_expr, &b_expr, &init})
    if (e->references(expr::VarId::p)) fail("only phi may reference the pressure p");
  if (dim == 1)
    for (const auto* e : {&a_expr, &b_expr, &phi_expr, &init})
      if (e->references(expr::VarId::y)) fail("a 1D problem cannot reference y");
}

double pressure_from_density(double u, double b, double m) {
  if (u <= 0.0) return 0.0;
  return m / (m - 1.0) * std::pow(u / b, m - 1.0);
}

double density_from_pressure(double p, double b, double m) {
  if (p <= 0.0) return 0.0;
  return b * std::pow((m - 1.0) / m * p, 1.0 / (m - 1.0));
}

Field pow_nonneg(const Field& base, double exponent) {
  double rounded = std::round(exponent);
  if (rounded == exponent && rounded >= 0.0 && rounded <= 1024.0) {
    auto e = static_cast<unsigned>(rounded);
    if (e == 0) return Field::Ones(base.size());
    Field result = Field::Ones(base.size());
    Field sq = base;
    for (;;) {
      if (e & 1u) result *= sq;
      e >>= 1u;
      if (e == 0) break;
      sq = sq.square();
    }
    return result;
  }
  return base.pow(exponent);
}

Field pressure_from_density(const Field& u, const Field& b, double m) {
  return m / (m - 1.0) * pow_nonneg(u / b, m - 1.0);
}

namespace {

// Sampling schedule shared by the assumption checker and ab_m_threshold:
// a grid at twice the run resolution and nine time slices.
std::vector<double> checker_times(const ProblemSpec& spec) {
  if (spec.horizon == 0.0) return {0.0};
  std::vector<double> out;
  for (int k = 0; k <= 8; ++k) out.push_back(spec.horizon * k / 8.0);
  return out;
}

}  // namespace

double ab_m_threshold(const ProblemSpec& spec) {
  Grid fine(spec.dim, 2 * spec.n, spec.half_width);
  CellCoords coords(fine);
  double min_a = std::numeric_limits<double>::infinity();
  double max_a = 0.0;
  for (double t : checker_times(spec)) {
    Field a = spec.a_expr.eval(coords.env(t));
    min_a = std::min(min_a, a.minCoeff());
    max_a = std::max(max_a, a.maxCoeff());
  }
  double sup_ainv = 1.0 / min_a;
  double inf_ainv = 1.0 / max_a;
  // 1 + (sup 1/a + 1)/(inf 1/a) * 8/3, written as a single fraction so a
  // constant coefficient yields the exact rational value (19/3 for a == 1).
  double threshold = (3.0 * inf_ainv + 8.0 * (sup_ainv + 1.0)) / (3.0 * inf_ainv);
  return std::max(2.0, threshold);
}

Field batch_fd(const expr::Expr& e, const CellCoords& coords, double t, expr::VarId var,
               int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("batch_fd: order must be 1 or 2");
  using expr::VarId;
  if (var == VarId::t) {
    double h = 1e-5 * std::max(1.0, std::abs(t));
    Field fp = e.eval(coords.env(t + h));
    Field fm = e.eval(coords.env(t - h));
    if (order == 1) return (fp - fm) / (2.0 * h);
    Field f0 = e.eval(coords.env(t));
    return (fp - 2.0 * f0 + fm) / (h * h);
  }
  if (var != VarId::x && var != VarId::y)
    throw std::invalid_argument("batch_fd: var must be x, y or t");
  const Field& base = var == VarId::x ? coords.x : coords.y;
  if (base.size() == 0) throw std::invalid_argument("batch_fd: y is not present on a 1D grid");
  Field h = 1e-5 * base.abs().max(1.0);

  auto eval_shifted = [&](const Field& shifted) {
    expr::BatchEnv env = coords.env(t);
    if (var == VarId::x)
      env.x = &shifted;
    else
      env.y = &shifted;
    return e.eval(env);
  };
  Field fp = eval_shifted(Field(base + h));
  Field fm = eval_shifted(Field(base - h));
  if (order == 1) return (fp - fm) / (2.0 * h);
  Field f0 = e.eval(coords.env(t));
  return (fp - 2.0 * f0 + fm) / h.square();
}

CoreCoefficients sample_core(const ProblemSpec& spec, const CellCoords& coords, double t) {
  CoreCoefficients c;
  c.time = t;
  c.a = spec.a_expr.eval(coords.env(t));
  c.b = spec.b_expr.eval(coords.env(t));
  c.b_over_a = c.b / c.a;
  return c;
}

CoefficientSet sample_coefficients(const ProblemSpec& spec, const CellCoords& coords, double t) {
  CoefficientSet c;
  c.time = t;
  c.a = spec.a_expr.eval(coords.env(t));
  c.b = spec.b_expr.eval(coords.env(t));
  c.b_over_a = c.b / c.a;

  using expr::Expr;
  using expr::OpCode;
  Expr log_ba = Expr::unary(OpCode::fn_log, Expr::binary(OpCode::divide, spec.b_expr, spec.a_expr));
  Expr log_b = Expr::unary(OpCode::fn_log, spec.b_expr);

  c.gamma.comp.push_back(batch_fd(log_ba, coords, t, expr::VarId::x, 1));
  if (coords.y.size() > 0) c.gamma.comp.push_back(batch_fd(log_ba, coords, t, expr::VarId::y, 1));

  c.dt_b = batch_fd(spec.b_expr, coords, t, expr::VarId::t, 1);
  c.dt_log_b = batch_fd(log_b, coords, t, expr::VarId::t, 1);

  c.lap_log_ba = batch_fd(log_ba, coords, t, expr::VarId::x, 2);
  if (coords.y.size() > 0) c.lap_log_ba += batch_fd(log_ba, coords, t, expr::VarId::y, 2);
  return c;
}

Field phi_of(const ProblemSpec& spec, const CellCoords& coords, double t, const Field& p) {
  return spec.phi_expr.eval(coords.env(t, p));
}

Field phi_tilde(const ProblemSpec& spec, const CoefficientSet& c, const CellCoords& coords,
                const Field& p) {
  return phi_of(spec, coords, c.time, p) - c.a * c.dt_log_b;
}

Field phi_bar(const ProblemSpec& spec, const CoefficientSet& c, const CellCoords& coords,
              const Field& p) {
  return c.b_over_a * phi_of(spec, coords, c.time, p) - c.dt_b;
}

}  // namespace pmelab
