#pragma once

#include "nanowire/types.hpp"

#include <cmath>
#include <string>
#include <tuple>

namespace nanowire {

/// Trapezoid weights for `n` uniformly spaced nodes with spacing `h`.
template <typename Scalar = double>
VectorX<Scalar> trapezoid_weights(int n, Scalar h) {
  VectorX<Scalar> w = VectorX<Scalar>::Constant(n, h);
  w(0) = h / 2;
  w(n - 1) = h / 2;
  return w;
}

/// Uniform node grid on [origin, origin + length] with trapezoid weights.
/// Both endpoints are nodes; used for the wire axis.
struct AxialGrid {
  int n = 0;
  double origin = 0.0;
  double length = 0.0;
  double h = 0.0;
  Vector weights;

  AxialGrid() = default;
  AxialGrid(int nodes, double len, double x0 = 0.0);

  double x(int i) const { return origin + i * h; }
  Vector nodes() const;
};

/// Node grid on the rectangular cross-section (0, width1) x (0, width2).
/// Node (i1, i2) has flat index i1 + n1 * i2. Boundary nodes are included.
struct CrossSectionGrid {
  int n1 = 0, n2 = 0;
  double width1 = 1.0, width2 = 1.0;
  double h1 = 0.0, h2 = 0.0;
  Vector weights;  // tensor-product trapezoid, size n1 * n2

  CrossSectionGrid() = default;
  CrossSectionGrid(int nodes1, int nodes2, double w1, double w2);

  int size() const { return n1 * n2; }
  int index(int i1, int i2) const { return i1 + n1 * i2; }
  double z1(int i1) const { return i1 * h1; }
  double z2(int i2) const { return i2 * h2; }
  double area() const { return width1 * width2; }
  bool on_boundary(int i1, int i2) const { return i1 == 0 || i2 == 0 || i1 == n1 - 1 || i2 == n2 - 1; }
};

/// Grid of the unit cell (-1/2, 1/2) x cross-section: periodic in y,
/// Dirichlet in z. Unknowns live on interior z nodes only, ordered with y
/// fastest, then interior z1, then interior z2.
struct UnitCellGrid {
  int n_y = 0;
  double h_y = 0.0;
  CrossSectionGrid cross;

  UnitCellGrid() = default;
  UnitCellGrid(int ny, const CrossSectionGrid& section);

  int m1() const { return cross.n1 - 2; }
  int m2() const { return cross.n2 - 2; }
  int unknowns() const { return n_y * m1() * m2(); }
  int unknown(int iy, int j1, int j2) const { return iy + n_y * (j1 + m1() * j2); }
  double y(int iy) const { return -0.5 + iy * h_y; }
  /// Quadrature weight of one interior node; every unknown carries the same one.
  double cell_volume() const { return h_y * cross.h1 * cross.h2; }
  double volume() const { return cross.area(); }
};

/// The device [0, L] x cross-section. Fields are stored as matrices with one
/// column per axial node and one row per cross-section node.
struct DeviceGrid {
  AxialGrid axis;
  CrossSectionGrid cross;

  DeviceGrid() = default;
  DeviceGrid(const AxialGrid& x, const CrossSectionGrid& section);

  int n_x() const { return axis.n; }
  int n_z() const { return cross.size(); }
  /// Diagonal of the full 3D quadrature (column-major over the field matrix).
  Matrix weights() const { return cross.weights * axis.weights.transpose(); }
};

/// Uniform momentum grid on [-p_max, p_max], exactly mirror-symmetric.
struct MomentumGrid {
  int n = 0;
  double p_max = 0.0;
  double h = 0.0;
  Vector nodes;
  Vector weights;

  MomentumGrid() = default;
  MomentumGrid(int count, double pmax);

  /// Trapezoid quadrature summing mirrored pairs first, so odd grid
  /// functions integrate to exactly zero.
  template <typename Derived>
  double integrate(const Eigen::MatrixBase<Derived>& f) const {
    double s = 0.0;
    for (int j = 0; j < n / 2; ++j) s += weights(j) * (f(j) + f(n - 1 - j));
    if (n % 2 == 1) s += weights(n / 2) * f(n / 2);
    return s;
  }
};

struct GridConfig {
  int n_y = 16;
  int n_z1 = 9;
  int n_z2 = 9;
  double width_z1 = 1.0;
  double width_z2 = 1.0;
  int n_x = 41;
  double length = 1.0;
  int n_p = 65;
  double p_max = 8.0;
};

std::tuple<UnitCellGrid, DeviceGrid, MomentumGrid> build_grids(const GridConfig& config);

// ---------------------------------------------------------------------------
// Norms

enum class NormKind { L1, L2, H1, LinfXL2z };

std::string to_string(NormKind kind);

double discrete_norm(const Vector& field, const AxialGrid& grid, NormKind which);
double discrete_norm(const Matrix& field, const DeviceGrid& grid, NormKind which);

/// Squared Dirichlet energy sum_edges w |dV/h|^2 of a device field; edge
/// weights are the trapezoid weights of the transverse directions.
double gradient_norm_squared(const Matrix& field, const DeviceGrid& grid);

/// Discrete H2 norm: H1 plus all second differences (Neumann reflection in z).
double h2_norm(const Matrix& field, const DeviceGrid& grid);

/// Forward-difference matrix of size (n - 1) x n on a uniform grid.
Matrix forward_difference(int n, double h);

}  // namespace nanowire
