#include "pmelab/grid.hpp"

#include <cmath>

namespace pmelab {

Grid::Grid(int dim_, int n_, double half_width_)
    : dim(dim_), n(n_), half_width(half_width_), h(2.0 * half_width_ / n_) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
  if (n < 8) throw std::invalid_argument("Grid: need at least 8 cells per axis");
  if (!(half_width > 0.0)) throw std::invalid_argument("Grid: half width must be positive");
}

Field Grid::cell_x() const {
  Field out(cells());
  if (dim == 1) {
    for (int i = 0; i < n; ++i) out[i] = axis_coord(i);
  } else {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) out[Eigen::Index(iy) * n + ix] = axis_coord(ix);
  }
  return out;
}

Field Grid::cell_y() const {
  if (dim == 1) throw std::logic_error("cell_y on a 1D grid");
  Field out(cells());
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) out[Eigen::Index(iy) * n + ix] = axis_coord(iy);
  return out;
}

Field VectorField::magnitude() const {
  return squared_magnitude().sqrt();
}

Field VectorField::squared_magnitude() const {
  Field out = comp.at(0).square();
  for (std::size_t k = 1; k < comp.size(); ++k) out += comp[k].square();
  return out;
}

namespace {

// Differences along a contiguous line of m samples with stride `stride`.
// Centered interior, one-sided second-order ends.
void line_derivative(const double* f, double* out, int m, Eigen::Index stride, double h) {
  const double inv2h = 1.0 / (2.0 * h);
  out[0] = (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) * inv2h;
  for (int i = 1; i < m - 1; ++i)
    out[Eigen::Index(i) * stride] = (f[(i + 1) * stride] - f[(i - 1) * stride]) * inv2h;
  out[Eigen::Index(m - 1) * stride] =
      (3.0 * f[Eigen::Index(m - 1) * stride] - 4.0 * f[Eigen::Index(m - 2) * stride] +
       f[Eigen::Index(m - 3) * stride]) *
      inv2h;
}

}  // namespace

Field axis_derivative(const Grid& g, const Field& f, int axis) {
  if (f.size() != g.cells()) throw std::invalid_argument("axis_derivative: field/grid mismatch");
  if (axis < 0 || axis >= g.dim) throw std::invalid_argument("axis_derivative: bad axis");
  Field out(f.size());
  if (g.dim == 1) {
    line_derivative(f.data(), out.data(), g.n, 1, g.h);
    return out;
  }
  if (axis == 0) {
    for (int iy = 0; iy < g.n; ++iy)
      line_derivative(f.data() + Eigen::Index(iy) * g.n, out.data() + Eigen::Index(iy) * g.n,
                      g.n, 1, g.h);
  } else {
    for (int ix = 0; ix < g.n; ++ix)
      line_derivative(f.data() + ix, out.data() + ix, g.n, g.n, g.h);
  }
  return out;
}

VectorField gradient(const Grid& g, const Field& f) {
  VectorField out;
  out.comp.reserve(g.dim);
  for (int axis = 0; axis < g.dim; ++axis) out.comp.push_back(axis_derivative(g, f, axis));
  return out;
}

Field divergence(const Grid& g, const VectorField& f) {
  if (static_cast<int>(f.comp.size()) != g.dim)
    throw std::invalid_argument("divergence: component count does not match grid dimension");
  Field out = axis_derivative(g, f.comp[0], 0);
  for (int axis = 1; axis < g.dim; ++axis) out += axis_derivative(g, f.comp[axis], axis);
  return out;
}

Field laplacian(const Grid& g, const Field& f) {
  return divergence(g, gradient(g, f));
}

Field negative_part(const Field& f) {
  return (-f).max(0.0);
}

double lp_norm(const Grid& g, const Field& f, int p) {
  if (f.size() != g.cells()) throw std::invalid_argument("lp_norm: field/grid mismatch");
  const double vol = g.cell_volume();
  switch (p) {
    case 1: return f.abs().sum() * vol;
    case 2: return std::sqrt(f.square().sum() * vol);
    case 3: return std::cbrt(f.abs().cube().sum() * vol);
    case 4: return std::pow(f.square().square().sum() * vol, 0.25);
    default: throw std::invalid_argument("lp_norm: p must be in {1,2,3,4}");
  }
}

double spacetime_accumulate(std::span<const double> values, std::span<const double> dts,
                            int root) {
  if (dts.size() + 1 != values.size())
    throw std::invalid_argument("spacetime_accumulate: need one dt per interval");
  double acc = 0.0;
  for (std::size_t k = 0; k < dts.size(); ++k)
    acc += 0.5 * dts[k] * (values[k] + values[k + 1]);
  switch (root) {
    case 1: return acc;
    case 2: return std::sqrt(acc);
    case 3: return std::cbrt(acc);
    case 4: return std::pow(acc, 0.25);
    default: throw std::invalid_argument("spacetime_accumulate: root must be in {1,2,3,4}");
  }
}

}  // namespace pmelab
