#include "pmelab/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace pmelab {

namespace {

constexpr int kProfileSteps = 4096;

struct ShotState {
  double p, q;
};

// RK4 across [0, R] from p(0) = center, p'(0) = 0; optionally records the
// trace. Returns the state at R.
ShotState integrate_profile(double center, double radius, double lambda, double p_ceiling,
                            std::vector<double>* xs, std::vector<double>* ps) {
  const double h = radius / kProfileSteps;
  auto accel = [&](double p) { return -lambda * (p_ceiling - p); };
  ShotState s{center, 0.0};
  if (xs) {
    xs->push_back(0.0);
    ps->push_back(s.p);
  }
  for (int i = 0; i < kProfileSteps; ++i) {
    double k1p = s.q, k1q = accel(s.p);
    double k2p = s.q + 0.5 * h * k1q, k2q = accel(s.p + 0.5 * h * k1p);
    double k3p = s.q + 0.5 * h * k2q, k3q = accel(s.p + 0.5 * h * k2p);
    double k4p = s.q + h * k3q, k4q = accel(s.p + h * k3p);
    s.p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    s.q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    if (xs) {
      xs->push_back((i + 1) * h);
      ps->push_back(s.p);
    }
  }
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double SaturatedProfile::closed_form(double at) const {
  double root = std::sqrt(lambda);
  return p_ceiling * (1.0 - std::cosh(root * at) / std::cosh(root * radius));
}

SaturatedProfile saturated_profile(double radius, double lambda, double p_ceiling) {
  if (!(radius > 0.0)) throw OracleError("saturated_profile: radius must be positive");
  if (!(lambda > 0.0) || !(p_ceiling > 0.0))
    throw OracleError("saturated_profile: lambda and p_M must be positive");

  auto edge_value = [&](double center) {
    return integrate_profile(center, radius, lambda, p_ceiling, nullptr, nullptr).p;
  };
  double lo = 0.0, hi = p_ceiling;
  double f_lo = edge_value(lo), f_hi = edge_value(hi);
  if (f_lo > 0.0 || f_hi < 0.0)
    throw OracleError("saturated_profile: shooting interval [0, p_M] does not bracket p(R) = 0");

  double center = 0.0, residual = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    center = 0.5 * (lo + hi);
    residual = edge_value(center);
    if (std::abs(residual) <= 1e-10) break;
    if ((residual < 0.0) == (f_lo < 0.0))
      lo = center;
    else
      hi = center;
    if (hi - lo < 1e-17 * p_ceiling)
      throw OracleError("saturated_profile: bisection stalled before |p(R)| <= 1e-10");
  }
  if (std::abs(residual) > 1e-10)
    throw OracleError("saturated_profile: shooting did not reach |p(R)| <= 1e-10");

  SaturatedProfile out;
  out.radius = radius;
  out.lambda = lambda;
  out.p_ceiling = p_ceiling;
  out.center_pressure = center;
  ShotState end = integrate_profile(center, radius, lambda, p_ceiling, &out.x, &out.p);
  out.edge_slope = end.q;
  return out;
}

double limit_front_speed(double radius, double a, double lambda, double p_ceiling) {
  double root = std::sqrt(lambda);
  return p_ceiling * root * std::tanh(root * radius) / a;
}

FrontCurve front_ode(double r0, double a, double lambda, double p_ceiling, double horizon,
                     int steps) {
  if (!(r0 > 0.0)) throw OracleError("front_ode: initial radius must be positive");
  FrontCurve out;
  out.t.push_back(0.0);
  out.radius.push_back(r0);
  if (horizon == 0.0) return out;

  const double h = horizon / steps;
  double r = r0;
  auto speed = [&](double radius) { return limit_front_speed(radius, a, lambda, p_ceiling); };
  for (int i = 0; i < steps; ++i) {
    double k1 = speed(r);
    double k2 = speed(r + 0.5 * h * k1);
    double k3 = speed(r + 0.5 * h * k2);
    double k4 = speed(r + h * k3);
    r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.t.push_back((i + 1) * h);
    out.radius.push_back(r);
  }
  return out;
}

CauchyTable m_sweep(std::span<const Trajectory> runs, const ProblemSpec& spec) {
  if (runs.size() < 2) throw std::invalid_argument("m_sweep: need at least two runs");
  const Trajectory& first = runs[0];
  for (const Trajectory& traj : runs) {
    if (traj.grid.dim != first.grid.dim || traj.grid.n != first.grid.n ||
        traj.grid.half_width != first.grid.half_width)
      throw std::invalid_argument("m_sweep: runs use different grids");
    if (traj.states.size() != first.states.size())
      throw std::invalid_argument("m_sweep: runs use different snapshot schedules");
    for (std::size_t k = 0; k < traj.states.size(); ++k)
      if (traj.states[k].t != first.states[k].t)
        throw std::invalid_argument("m_sweep: runs use different snapshot times");
  }

  const Grid& g = first.grid;
  CellCoords coords(g);
  const double vol = g.cell_volume();
  std::vector<double> dts;
  for (std::size_t k = 0; k + 1 < first.states.size(); ++k)
    dts.push_back(first.states[k + 1].t - first.states[k].t);

  CauchyTable table;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const Trajectory& lo = runs[i];
    const Trajectory& hi = runs[i + 1];
    std::vector<double> du(lo.states.size()), dp(lo.states.size());
    for (std::size_t k = 0; k < lo.states.size(); ++k) {
      Field b = spec.b_expr.eval(coords.env(lo.states[k].t));
      du[k] = (hi.states[k].u - lo.states[k].u).abs().sum() * vol;
      Field p_lo = pressure_from_density(lo.states[k].u, b, lo.m);
      Field p_hi = pressure_from_density(hi.states[k].u, b, hi.m);
      dp[k] = (p_hi - p_lo).abs().sum() * vol;
    }
    CauchyRow row;
    row.m_low = lo.m;
    row.m_high = hi.m;
    row.du_l1 = spacetime_accumulate(du, dts, 1);
    row.dp_l1 = spacetime_accumulate(dp, dts, 1);
    table.rows.push_back(row);
  }

  if (table.rows.size() >= 2) {
    std::vector<double> qu, qp;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
      if (table.rows[i].du_l1 > 0.0) qu.push_back(table.rows[i + 1].du_l1 / table.rows[i].du_l1);
      if (table.rows[i].dp_l1 > 0.0) qp.push_back(table.rows[i + 1].dp_l1 / table.rows[i].dp_l1);
    }
    if (!qu.empty()) table.ratio_u = median(qu);
    if (!qp.empty()) table.ratio_p = median(qp);
  }
  return table;
}

}  // namespace pmelab
