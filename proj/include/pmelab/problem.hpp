#pragma once

#include "pmelab/expr.hpp"
#include "pmelab/grid.hpp"

#include <string>
#include <vector>

namespace pmelab {

/// Full description of one experiment: coefficient expressions, growth-term
/// parameters, initial data, domain, horizon and the m values to sweep.
struct ProblemSpec {
  int dim = 1;
  double half_width = 1.0;  // domain is [-L, L]^d
  int n = 64;               // cells per axis
  double horizon = 1.0;     // final time T (0 gives a single-snapshot run)

  expr::Expr a_expr;    // a(x[,y],t,r) >= 1/Lambda
  expr::Expr b_expr;    // b(x[,y],t,r)
  expr::Expr phi_expr;  // growth term, may also reference p

  // Exactly one of these defines the initial data. The density form is used
  // as written; the pressure form specifies the initial pressure profile and
  // is inverted through the constitutive law per m, which keeps the initial
  // pressure family uniform in m.
  expr::Expr u0_expr;
  expr::Expr u0_pressure_expr;

  double lambda = 1.0;        // -d(phi)/dp lower bound
  double p_ceiling = 1.0;     // p_M, pressure at which growth stops
  double coeff_bound = 1.0;   // Lambda, two-sided bound on a, b
  double tilde_lambda = 1.0;  // structural constant of the A4 inequality

  std::vector<double> m_list;
  double epsilon_lift = 0.0;  // uniform lift of the initial data
  double cfl = 0.5;
  int snapshots = 64;

  Grid make_grid() const { return Grid(dim, n, half_width); }

  /// Throws std::invalid_argument on a malformed spec.
  void validate() const;
};

// --- constitutive law -------------------------------------------------------

/// p = m/(m-1) (u/b)^(m-1); zero density gives zero pressure.
double pressure_from_density(double u, double b, double m);

/// Exact inverse: u = b ((m-1)/m p)^(1/(m-1)).
double density_from_pressure(double p, double b, double m);

/// Elementwise base^exponent for base >= 0, with a squaring fast path for
/// integral exponents (the solver's hot loop).
Field pow_nonneg(const Field& base, double exponent);

/// Pointwise constitutive law on fields.
Field pressure_from_density(const Field& u, const Field& b, double m);

/// Stiffness threshold of the L^3 estimate on |w|_-:
/// max{2, 1 + (sup 1/a + 1)/(inf 1/a) * 8/3}, with sup/inf estimated by
/// sampling at the assumption-checker resolution. m below it still runs; the
/// diagnostics are flagged out-of-guarantee.
double ab_m_threshold(const ProblemSpec& spec);

// --- derived coefficients ---------------------------------------------------

/// Cell-center coordinate arrays, computed once per grid.
struct CellCoords {
  Field x;
  Field y;  // empty in 1D

  explicit CellCoords(const Grid& g) : x(g.cell_x()) {
    if (g.dim == 2) y = g.cell_y();
  }

  expr::BatchEnv env(double t) const {
    expr::BatchEnv e;
    e.x = &x;
    if (y.size() > 0) e.y = &y;
    e.t = t;
    return e;
  }

  expr::BatchEnv env(double t, const Field& p) const {
    expr::BatchEnv e = env(t);
    e.p = &p;
    return e;
  }
};

/// The coefficient fields the time stepper needs, sampled at one time.
struct CoreCoefficients {
  double time = 0.0;
  Field a, b, b_over_a;
};

/// Everything the diagnostics need on top of CoreCoefficients:
/// gamma = grad log(b/a), time derivatives of b, and Delta log(b/a),
/// all by finite differences of the coefficient expressions.
struct CoefficientSet {
  double time = 0.0;
  Field a, b, b_over_a;
  VectorField gamma;
  Field dt_b;
  Field dt_log_b;
  Field lap_log_ba;
};

/// Centered finite difference of an expression over all cells at once.
/// var must be x, y or t. Step per cell: 1e-5 * max(1, |coordinate|).
Field batch_fd(const expr::Expr& e, const CellCoords& coords, double t, expr::VarId var,
               int order);

CoreCoefficients sample_core(const ProblemSpec& spec, const CellCoords& coords, double t);
CoefficientSet sample_coefficients(const ProblemSpec& spec, const CellCoords& coords, double t);

/// Initial density for one stiffness exponent, honoring whichever of the two
/// initial-data forms the spec carries.
Field initial_density(const ProblemSpec& spec, const CellCoords& coords, double m);

/// Growth term and its two shifted variants, per cell for a pressure field.
Field phi_of(const ProblemSpec& spec, const CellCoords& coords, double t, const Field& p);
/// phi_tilde = phi - a d/dt log b.
Field phi_tilde(const ProblemSpec& spec, const CoefficientSet& c, const CellCoords& coords,
                const Field& p);
/// phi_bar = (b/a) phi - d/dt b.
Field phi_bar(const ProblemSpec& spec, const CoefficientSet& c, const CellCoords& coords,
              const Field& p);

}  // namespace pmelab
