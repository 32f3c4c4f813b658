#pragma once

#include "nanowire/grids.hpp"
#include "nanowire/lanczos.hpp"

#include <functional>
#include <optional>
#include <string>

namespace nanowire {

/// Lattice potential sampled on every unit-cell node, layout y fastest then
/// z1 then z2 (size n_y * n1 * n2). Must be nonnegative.
class LatticePotential {
 public:
  LatticePotential(const UnitCellGrid& grid, Vector samples);

  static LatticePotential constant(const UnitCellGrid& grid, double value);
  static LatticePotential from_function(const UnitCellGrid& grid,
                                        const std::function<double(double y, double z1, double z2)>& w);

  const Vector& samples() const { return samples_; }
  double sup_norm() const { return sup_; }
  double at(int iy, int i1, int i2) const { return samples_(iy + n_y_ * (i1 + n1_ * i2)); }
  /// FNV-1a digest of the raw sample bytes.
  std::string hash() const;

 private:
  Vector samples_;
  double sup_ = 0.0;
  int n_y_ = 0, n1_ = 0;
};

/// Sparse H = -1/2 Lap_h + W on the interior unknowns of the unit cell.
SparseMatrix assemble_hamiltonian(const LatticePotential& w, const UnitCellGrid& grid);

/// Exact solver for (-1/2 Lap_h + c) x = b on the unit cell by fast
/// diagonalization: the 1D periodic and Dirichlet eigenbases are applied
/// mode by mode. Used as the preconditioner of the shifted solves.
class SeparableLaplacian {
 public:
  explicit SeparableLaplacian(const UnitCellGrid& grid);
  Vector solve(const Vector& b, double c) const;
  /// Sorted eigenvalues of -1/2 Lap_h (all unknowns).
  Vector eigenvalues() const;

 private:
  Vector apply_modes(const Vector& x, bool forward) const;
  UnitCellGrid grid_;
  Matrix qy_, q1_, q2_;  // orthonormal 1D eigenvectors
  Vector ly_, l1_, l2_;  // matching eigenvalues of -d^2
};

struct BlochOptions {
  int n_bands = 5;
  double eig_tol = 1e-8;
  double degeneracy_tol = 1e-6;
  double coupling_tol = 1e-6;
  LanczosOptions lanczos;
};

struct BlochSpectrum {
  UnitCellGrid grid;
  int n_bands = 0;
  Vector energies;
  Matrix eigenfunctions;  // unknowns x bands, unit L2(U) norm
  Vector residuals;
  Vector free_energies;   // same discrete operator with W = 0
  Matrix grad_elements;   // antisymmetrized P
  double grad_antisymmetry_defect = 0.0;
  Vector masses;          // empty until effective masses are computed
  Vector mass_remainders;
  Matrix g;               // cross-section nodes x bands
  double potential_sup = 0.0;
  std::string potential_hash;
};

/// Lowest `options.n_bands` eigenpairs of H; fills energies, eigenfunctions,
/// residuals and free_energies.
BlochSpectrum solve_bloch(const SparseMatrix& H, const LatticePotential& w, const UnitCellGrid& grid,
                          const BlochOptions& options);

/// Matrix of integral(d_y chi_m * chi_n) using centered periodic differences,
/// stored antisymmetrized. The second member is the defect removed.
std::pair<Matrix, double> gradient_matrix_elements(const BlochSpectrum& s);

/// Raised when two retained bands are closer than the degeneracy tolerance
/// while still coupled through the gradient, so no scalar mass exists.
class DegenerateCouplingError : public AssumptionViolation {
 public:
  DegenerateCouplingError(int band_a, int band_b, double gap, double coupling);
  int band_a, band_b;
};

struct EffectiveMass {
  double mass = 1.0;
  double remainder = 0.0;  // magnitude of the last (highest) retained term
};

/// Effective mass of one band (zero based). Needs grad_elements.
EffectiveMass effective_mass(const BlochSpectrum& s, int band, double degeneracy_tol, double coupling_tol);

/// All bands; throws DegenerateCouplingError for the first offending pair.
std::pair<Vector, Vector> effective_masses(const BlochSpectrum& s, double degeneracy_tol, double coupling_tol);

/// g_nn(z) = integral chi_n^2 dy on the full cross-section nodes (boundary rows are 0).
Matrix confinement_densities(const BlochSpectrum& s);

/// The device-facing part of a spectrum: what transport, electrostatics and
/// the kinetic model consume. g is indexed by cross-section node.
struct Subbands {
  Vector energies;
  Vector masses;
  Matrix g;

  int count() const { return static_cast<int>(energies.size()); }
};

Subbands subbands(const BlochSpectrum& s);

/// Bands of the W = 0 problem on a rectangle in closed form, with y-constant
/// Bloch functions only: E = pi^2/2 (p^2/w1^2 + q^2/w2^2), m = 1 and
/// g = 4/(w1 w2) sin^2 sin^2 sampled on the nodes, rescaled so the discrete
/// integral is exactly 1.
Subbands free_subbands(const CrossSectionGrid& cross, int count);

/// Full pipeline: assemble, solve, P, masses, g.
BlochSpectrum compute_spectrum(const LatticePotential& w, const UnitCellGrid& grid, const BlochOptions& options);

/// Tail of sum exp(-lambda L)(L + ||W||)^2 over the continuum free spectrum of
/// the rectangular cell, starting at the (n_bands+1)-th level.
double band_truncation_bound(int n_bands, double width1, double width2, double potential_sup, double lambda);
inline double band_truncation_bound(const BlochSpectrum& s, double lambda) {
  return band_truncation_bound(s.n_bands, s.grid.cross.width1, s.grid.cross.width2, s.potential_sup, lambda);
}

/// Sorted continuum free levels 1/2 (4 pi^2 m^2 + pi^2 p^2/w1^2 + pi^2 q^2/w2^2), lowest `count`.
Vector continuum_free_levels(int count, double width1, double width2);

}  // namespace nanowire
