#pragma once

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <vector>

namespace pmelab {

/// One real value per cell, flattened; in 2D the index is iy*n + ix
/// (x fastest).
using Field = Eigen::ArrayXd;

/// Uniform cell-centered grid on [-L, L]^d, d in {1, 2}.
struct Grid {
  int dim;
  int n;              // cells per axis
  double half_width;  // L
  double h;           // 2L / n

  Grid(int dim, int n, double half_width);

  Eigen::Index cells() const { return dim == 1 ? n : Eigen::Index(n) * n; }
  double cell_volume() const { return dim == 1 ? h : h * h; }

  /// Center coordinate of cell index i along one axis.
  double axis_coord(int i) const { return -half_width + (i + 0.5) * h; }

  /// Per-cell x coordinates (size cells()).
  Field cell_x() const;
  /// Per-cell y coordinates; throws in 1D.
  Field cell_y() const;

  Field zeros() const { return Field::Zero(cells()); }
};

/// One Field per axis.
struct VectorField {
  std::vector<Field> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : comp(g.dim, g.zeros()) {}

  /// Pointwise Euclidean magnitude.
  Field magnitude() const;
  /// Pointwise squared magnitude.
  Field squared_magnitude() const;
};

/// Difference along one axis: centered in the interior, one-sided
/// second-order at the two boundary cells.
Field axis_derivative(const Grid& g, const Field& f, int axis);

VectorField gradient(const Grid& g, const Field& f);

/// Adjoint-consistent with gradient: on cells whose support stays away from
/// the boundary, sum(g * divergence(F)) == -sum(dot(F, gradient(g))).
Field divergence(const Grid& g, const VectorField& f);

/// divergence(gradient(f)) composed exactly, so the discrete identity
/// laplacian == div(grad) holds to rounding. Second-order accurate.
Field laplacian(const Grid& g, const Field& f);

/// |f|_- : 0 where f > 0, -f where f <= 0.
Field negative_part(const Field& f);

/// (sum |f|^p h^d)^(1/p) for p in {1, 2, 3, 4}.
double lp_norm(const Grid& g, const Field& f, int p);

/// Time-trapezoid of per-snapshot spatial integrals, then the outer root.
/// values has one entry per snapshot, dts one entry per interval.
double spacetime_accumulate(std::span<const double> values, std::span<const double> dts,
                            int root = 1);

}  // namespace pmelab
