#include "pmelab/assumptions.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace pmelab {

namespace {

constexpr double kTol = 1e-6;

std::string point_str(const Grid& g, const CellCoords& coords, Eigen::Index cell, double t) {
  char buf[96];
  if (g.dim == 1)
    std::snprintf(buf, sizeof(buf), "x=%.6g, t=%.6g", coords.x[cell], t);
  else
    std::snprintf(buf, sizeof(buf), "x=%.6g, y=%.6g, t=%.6g", coords.x[cell], coords.y[cell], t);
  return buf;
}

std::vector<double> time_slices(const ProblemSpec& spec) {
  if (spec.horizon == 0.0) return {0.0};
  std::vector<double> out;
  for (int k = 0; k <= 8; ++k) out.push_back(spec.horizon * k / 8.0);
  return out;
}

std::vector<double> pressure_levels(const ProblemSpec& spec) {
  std::vector<double> out;
  for (int j = 0; j <= 8; ++j) out.push_back(spec.p_ceiling * j / 8.0);
  return out;
}

// Tracks the smallest margin seen and where it occurred.
struct WorstTracker {
  double margin = std::numeric_limits<double>::infinity();
  std::string point;

  void offer(const Field& margins, const Grid& g, const CellCoords& coords, double t,
             const std::string& extra = "") {
    Eigen::Index cell = 0;
    double m = margins.minCoeff(&cell);
    if (m < margin) {
      margin = m;
      point = point_str(g, coords, cell, t) + extra;
    }
  }

  AssumptionCheck finish(const std::string& name, const std::string& detail = "") const {
    AssumptionCheck c;
    c.name = name;
    c.margin = margin;
    c.pass = margin >= -kTol;
    c.worst_point = point;
    c.detail = detail;
    return c;
  }
};

AssumptionCheck check_coefficient_bounds(const ProblemSpec& spec, const Grid& g,
                                         const CellCoords& coords) {
  WorstTracker worst;
  for (double t : time_slices(spec)) {
    for (const auto* e : {&spec.a_expr, &spec.b_expr}) {
      Field v = e->eval(coords.env(t));
      worst.offer((v - 1.0 / spec.coeff_bound).min(spec.coeff_bound - v), g, coords, t);
    }
  }
  return worst.finish("A1-coefficient-bounds", "1/Lambda <= a, b <= Lambda");
}

AssumptionCheck check_coefficient_derivatives(const ProblemSpec& spec, const Grid& g,
                                              const CellCoords& coords) {
  WorstTracker worst;
  std::vector<expr::VarId> axes{expr::VarId::x};
  if (g.dim == 2) axes.push_back(expr::VarId::y);
  axes.push_back(expr::VarId::t);
  for (double t : time_slices(spec)) {
    for (const auto* e : {&spec.a_expr, &spec.b_expr}) {
      for (auto axis : axes) {
        for (int order : {1, 2}) {
          Field d = batch_fd(*e, coords, t, axis, order);
          worst.offer(spec.coeff_bound - d.abs(), g, coords, t);
        }
      }
    }
  }
  return worst.finish("A1-coefficient-derivatives",
                      "|d^k a|, |d^k b| <= Lambda for k <= 2 (orders 3-4 not checked)");
}

AssumptionCheck check_phi_monotone(const ProblemSpec& spec, const Grid& g,
                                   const CellCoords& coords) {
  WorstTracker worst;
  for (double t : time_slices(spec)) {
    for (double level : pressure_levels(spec)) {
      double h = 1e-5 * std::max(1.0, level);
      Field lift = Field::Constant(g.cells(), level + h);
      Field drop = Field::Constant(g.cells(), level - h);
      Field dphi = (spec.phi_expr.eval(coords.env(t, lift)) -
                    spec.phi_expr.eval(coords.env(t, drop))) /
                   (2.0 * h);
      char extra[32];
      std::snprintf(extra, sizeof(extra), ", p=%.6g", level);
      worst.offer(-spec.lambda - dphi, g, coords, t, extra);
    }
  }
  return worst.finish("A1-phi-monotone", "d(phi)/dp <= -lambda");
}

AssumptionCheck check_phi_root(const ProblemSpec& spec, const Grid& g,
                               const CellCoords& coords) {
  WorstTracker worst;
  Field ceiling = Field::Constant(g.cells(), spec.p_ceiling);
  for (double t : time_slices(spec)) {
    Field phi = spec.phi_expr.eval(coords.env(t, ceiling));
    worst.offer(-phi.abs(), g, coords, t);
  }
  return worst.finish("A1-phi-root", "phi(x, t, p_M) = 0");
}

void check_initial_data(const ProblemSpec& spec, const Grid& g, const CellCoords& coords,
                        AssumptionReport& report) {
  Field u0 = spec.u0_expr.eval(coords.env(0.0));
  Field b0 = spec.b_expr.eval(coords.env(0.0));

  WorstTracker nonneg;
  nonneg.offer(u0, g, coords, 0.0);
  report.checks.push_back(nonneg.finish("A2-initial-nonnegative", "u0 >= 0"));

  WorstTracker ceiling;
  for (double m : spec.m_list) {
    Field p0 = pressure_from_density(u0.max(0.0), b0, m);
    char extra[32];
    std::snprintf(extra, sizeof(extra), ", m=%.6g", m);
    ceiling.offer(spec.p_ceiling - p0, g, coords, 0.0, extra);
  }
  report.checks.push_back(ceiling.finish("A2-initial-pressure", "p(u0) <= p_M for every m"));

  // Compact support strictly inside the box: the solver keeps a guard band of
  // four run-resolution cells, so u0 must vanish there.
  double run_h = 2.0 * spec.half_width / spec.n;
  double limit = spec.half_width - 4.0 * run_h;
  WorstTracker support;
  Field radius = g.dim == 2 ? Field((coords.x.square() + coords.y.square()).sqrt())
                            : Field(coords.x.abs());
  Field margins =
      (u0.abs() <= kTol).select(Field::Constant(g.cells(), limit), limit - radius);
  support.offer(margins, g, coords, 0.0);
  report.checks.push_back(
      support.finish("A2-initial-support", "supp(u0) at least 4 run cells from the box edge"));
}

AssumptionCheck check_structure_clause(const ProblemSpec& spec, const Grid& g,
                                       const CellCoords& coords) {
  if (spec.dim == 1) {
    AssumptionCheck c;
    c.name = "A3-coefficient-structure";
    c.pass = true;
    c.margin = 0.0;
    c.detail = "clause (i): d = 1";
    return c;
  }

  // Clause (ii): radial coefficients, probed on 16 rotations of sample radii.
  double radial_spread = 0.0;
  std::string radial_worst;
  for (double t : time_slices(spec)) {
    for (int j = 1; j <= 12; ++j) {
      double radius = spec.half_width * j / 12.0;
      for (const auto* e : {&spec.a_expr, &spec.b_expr}) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = 0; k < 16; ++k) {
          double theta = 2.0 * M_PI * k / 16.0;
          expr::Env env;
          env.x = radius * std::cos(theta);
          env.y = radius * std::sin(theta);
          env.t = t;
          double v = e->eval(env);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo > radial_spread) {
          radial_spread = hi - lo;
          char buf[64];
          std::snprintf(buf, sizeof(buf), "r=%.6g, t=%.6g", radius, t);
          radial_worst = buf;
        }
      }
    }
  }
  if (radial_spread <= kTol) {
    AssumptionCheck c;
    c.name = "A3-coefficient-structure";
    c.pass = true;
    c.margin = -radial_spread;
    c.worst_point = radial_worst;
    c.detail = "clause (ii): a, b radial in space";
    return c;
  }

  // Clause (iii): |grad(b/a)| <= eps / |x| for |x| >= R with
  // eps <= (d - 1/2) / Lambda^2;  R fixed at L/4.
  using expr::Expr;
  using expr::OpCode;
  Expr ratio = Expr::binary(OpCode::divide, spec.b_expr, spec.a_expr);
  double eps_max = (spec.dim - 0.5) / (spec.coeff_bound * spec.coeff_bound);
  double inner_radius = spec.half_width / 4.0;
  WorstTracker growth;
  Field radius = (coords.x.square() + coords.y.square()).sqrt();
  for (double t : time_slices(spec)) {
    Field gx = batch_fd(ratio, coords, t, expr::VarId::x, 1);
    Field gy = batch_fd(ratio, coords, t, expr::VarId::y, 1);
    Field weighted = (gx.square() + gy.square()).sqrt() * radius;
    Field margins = (radius < inner_radius)
                        .select(Field::Constant(g.cells(), eps_max), eps_max - weighted);
    growth.offer(margins, g, coords, t);
  }
  AssumptionCheck c = growth.finish(
      "A3-coefficient-structure",
      "clause (iii): |grad(b/a)| <= eps/|x| for |x| >= L/4 (radial test failed first)");
  return c;
}

AssumptionCheck check_structural_inequality(const ProblemSpec& spec, const Grid& g,
                                            const CellCoords& coords) {
  using expr::Expr;
  using expr::OpCode;
  Expr log_ba =
      Expr::unary(OpCode::fn_log, Expr::binary(OpCode::divide, spec.b_expr, spec.a_expr));
  WorstTracker worst;
  for (double t : time_slices(spec)) {
    Field lap = batch_fd(log_ba, coords, t, expr::VarId::x, 2);
    if (g.dim == 2) lap += batch_fd(log_ba, coords, t, expr::VarId::y, 2);
    worst.offer(lap - (spec.tilde_lambda - spec.lambda), g, coords, t);
  }
  return worst.finish("A4-structural", "Delta log(b/a) >= tilde_lambda - lambda");
}

}  // namespace

AssumptionReport check_assumptions(const ProblemSpec& spec) {
  spec.validate();
  Grid fine(spec.dim, 2 * spec.n, spec.half_width);
  CellCoords coords(fine);

  AssumptionReport report;
  try {
    report.checks.push_back(check_coefficient_bounds(spec, fine, coords));
    report.checks.push_back(check_coefficient_derivatives(spec, fine, coords));
    report.checks.push_back(check_phi_monotone(spec, fine, coords));
    report.checks.push_back(check_phi_root(spec, fine, coords));
    check_initial_data(spec, fine, coords, report);
    report.checks.push_back(check_structure_clause(spec, fine, coords));
    report.checks.push_back(check_structural_inequality(spec, fine, coords));
  } catch (const expr::EvalError& e) {
    throw expr::EvalError(std::string(e.what()) + " while sampling the assumption box");
  }
  report.notes.push_back(
      "the initial-data bound on |d/dt p| in L1 is not well-defined from u0 alone and is "
      "not checked");
  return report;
}

}  // namespace pmelab
