#pragma once

#include "nanowire/grids.hpp"

namespace nanowire {

/// B(s) = s / (e^s - 1), with B(0) = 1 and a series branch near 0.
double bernoulli(double s);

/// Exponentially fitted discretization of D (dN/dx + N dVs/dx) on one cell:
///   (D/h) [B(-d) N_right - B(d) N_left],  d = Vs_right - Vs_left.
/// Vanishes on local equilibria N ~ exp(-Vs) for any d.
double sg_flux(double N_left, double N_right, double Vs_left, double Vs_right, double D_face, double h);

/// Harmonic mean of nodal diffusion values on each of the n - 1 faces.
Vector face_diffusion(const Vector& D);

struct DirichletData {
  double left = 1.0;
  double right = 1.0;
};

/// One backward-Euler step of dN/dt = d/dx(D (dN/dx + N dVs/dx)) + source with
/// Scharfetter-Gummel fluxes; the end values are pinned to `bc`. The matrix is
/// a column-diagonally-dominant M-matrix, so nonnegative data stay nonnegative.
Vector advance_density(const Vector& N, const Vector& Vs, const Vector& D, double dt, const AxialGrid& grid,
                       const DirichletData& bc, const Vector& source = Vector());

/// Stationary solution of the same discrete problem.
Vector steady_state(const Vector& Vs, const Vector& D, const AxialGrid& grid, const DirichletData& bc);

/// Particle current on the faces, positive toward increasing x:
/// J = -D (dN/dx + N dVs/dx), so pure diffusion gives J = -D * slope.
Vector current(const Vector& N, const Vector& Vs, const Vector& D, const AxialGrid& grid);

/// D(x) = tau sum_n w_n(x) / m_n with Boltzmann weights w_n = exp(-(E_n + V_nn)) / Z.
Vector diffusion_constant_alpha(const Vector& energies, const Vector& masses, const Matrix& Vnn, double tau);

/// Rejects diffusion values outside [D1, D2] or a nonpositive lower bound.
void check_diffusion_bounds(const Vector& D, double D1, double D2);

/// Solves a tridiagonal system without pivoting (sub, diag, super of equal
/// length; sub(0) and super(n-1) unused).
Vector solve_tridiagonal(Vector sub, Vector diag, Vector super, Vector rhs);

}  // namespace nanowire
