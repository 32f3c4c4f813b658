#pragma once

#include "nanowire/bloch.hpp"
#include "nanowire/grids.hpp"

#include <vector>

namespace nanowire {

/// V_nn(x) = <V(x, .), g_nn>: one row per band, one column per axial node.
Matrix project_potential(const Matrix& V, const Subbands& bands, const CrossSectionGrid& cross);

struct PartitionFunction {
  Vector Z;
  Vector Vs;  // -log Z, computed without forming Z where it would underflow
};

/// Z = sum_n exp(-(E_n + V_nn)) and V_s = -log Z per axial node.
PartitionFunction effective_potential(const Matrix& Vnn, const Vector& energies);

/// Occupation weights exp(-(E_n + V_nn)) / Z, stabilized by the largest exponent.
Matrix band_weights(const Matrix& Vnn, const Vector& energies);

/// S[V](x, z) = sum_n w_n(x) g_nn(z); rows are cross-section nodes.
Matrix charge_profile(const Matrix& Vnn, const Vector& energies, const Matrix& g);

struct EffectiveQuantities {
  Matrix Vnn;
  PartitionFunction partition;
  Matrix weights;
  Matrix S;
  double epsilon = 0.0;
};

/// Everything above at once for an already-mollified potential.
EffectiveQuantities effective_quantities(const Matrix& V, const Subbands& bands, const CrossSectionGrid& cross,
                                         double epsilon = 0.0);

struct ChargeDensity {
  Matrix rho;                 // N_s S on the device nodes
  Matrix Nn;                  // per-band axial densities
  Vector u;                   // Slotboom variable N_s / Z (0 where N_s = 0)
  Vector EF;                  // log u (NaN where N_s = 0)
  std::vector<bool> occupied; // N_s > 0
};

ChargeDensity charge_density(const Vector& Ns, const EffectiveQuantities& eq, const Vector& energies);

/// Checks that the boundary potential has a vanishing normal derivative on
/// the cross-section boundary to discretization accuracy.
void check_boundary_potential(const Vector& Vb, const CrossSectionGrid& cross);

}  // namespace nanowire
