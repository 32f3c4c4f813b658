#include "nanowire/electrostatics.hpp"

#include <cmath>
#include <limits>

namespace nanowire {

Matrix project_potential(const Matrix& V, const Subbands& bands, const CrossSectionGrid& cross) {
  require(V.rows() == cross.size(), "potential rows must match the cross-section nodes");
  require(bands.g.rows() == cross.size(), "confinement densities live on a different cross-section");
  return bands.g.transpose() * cross.weights.asDiagonal() * V;
}

PartitionFunction effective_potential(const Matrix& Vnn, const Vector& energies) {
  require(energies.size() >= 1 && Vnn.rows() == energies.size(), "band count mismatch between V_nn and energies");
  PartitionFunction out{Vector(Vnn.cols()), Vector(Vnn.cols())};
  for (Eigen::Index i = 0; i < Vnn.cols(); ++i) {
    const Vector a = energies + Vnn.col(i);
    const double lo = a.minCoeff();
    // ascending order of E_n keeps the sum accurate when terms span many decades
    double s = 0.0;
    for (Eigen::Index n = 0; n < a.size(); ++n) s += std::exp(-(a(n) - lo));
    out.Vs(i) = lo - std::log(s);
    out.Z(i) = std::exp(-out.Vs(i));
  }
  return out;
}

Matrix band_weights(const Matrix& Vnn, const Vector& energies) {
  require(Vnn.rows() == energies.size(), "band count mismatch between V_nn and energies");
  Matrix w(Vnn.rows(), Vnn.cols());
  for (Eigen::Index i = 0; i < Vnn.cols(); ++i) {
    const Vector a = energies + Vnn.col(i);
    w.col(i) = (-(a.array() - a.minCoeff())).exp().matrix();
    w.col(i) /= w.col(i).sum();
  }
  return w;
}

Matrix charge_profile(const Matrix& Vnn, const Vector& energies, const Matrix& g) {
  require(g.cols() == energies.size(), "band count mismatch between g and energies");
  return g * band_weights(Vnn, energies);
}

EffectiveQuantities effective_quantities(const Matrix& V, const Subbands& bands, const CrossSectionGrid& cross,
                                         double epsilon) {
  EffectiveQuantities q;
  q.Vnn = project_potential(V, bands, cross);
  q.partition = effective_potential(q.Vnn, bands.energies);
  q.weights = band_weights(q.Vnn, bands.energies);
  q.S = bands.g * q.weights;
  q.epsilon = epsilon;
  return q;
}

ChargeDensity charge_density(const Vector& Ns, const EffectiveQuantities& eq, const Vector& energies) {
  const Eigen::Index nx = eq.Vnn.cols();
  require(Ns.size() == nx, "surface density does not match the axial grid");
  require(energies.size() == eq.Vnn.rows(), "band count mismatch");
  ChargeDensity c;
  c.rho = eq.S * Ns.asDiagonal();
  c.Nn = eq.weights * Ns.asDiagonal();
  c.u = Vector::Zero(nx);
  c.EF = Vector::Constant(nx, std::numeric_limits<double>::quiet_NaN());
  c.occupied.assign(static_cast<std::size_t>(nx), false);
  for (Eigen::Index i = 0; i < nx; ++i) {
    require(Ns(i) >= 0.0, "surface density must be nonnegative");
    if (Ns(i) > 0.0) {
      c.occupied[static_cast<std::size_t>(i)] = true;
      c.EF(i) = std::log(Ns(i)) + eq.partition.Vs(i);
      c.u(i) = std::exp(c.EF(i));
    }
  }
  return c;
}

void check_boundary_potential(const Vector& Vb, const CrossSectionGrid& cs) {
  require(Vb.size() == cs.size(), "boundary potential must have one value per cross-section node");
  auto at = [&](int i1, int i2) { return Vb(cs.index(i1, i2)); };
  double curvature = 0.0, defect = 0.0;
  // second-order one-sided normal derivative on each edge, compared against
  // the size of the second differences so smooth compatible data passes at O(h^2)
  for (int i2 = 0; i2 < cs.n2; ++i2) {
    for (int k = 1; k + 1 < cs.n1; ++k)
      curvature = std::max(curvature, std::abs(at(k - 1, i2) - 2 * at(k, i2) + at(k + 1, i2)) / cs.h1);
    defect = std::max(defect, std::abs(-3 * at(0, i2) + 4 * at(1, i2) - at(2, i2)) / (2 * cs.h1));
    const int e = cs.n1 - 1;
    defect = std::max(defect, std::abs(-3 * at(e, i2) + 4 * at(e - 1, i2) - at(e - 2, i2)) / (2 * cs.h1));
  }
  for (int i1 = 0; i1 < cs.n1; ++i1) {
    for (int k = 1; k + 1 < cs.n2; ++k)
      curvature = std::max(curvature, std::abs(at(i1, k - 1) - 2 * at(i1, k) + at(i1, k + 1)) / cs.h2);
    defect = std::max(defect, std::abs(-3 * at(i1, 0) + 4 * at(i1, 1) - at(i1, 2)) / (2 * cs.h2));
    const int e = cs.n2 - 1;
    defect = std::max(defect, std::abs(-3 * at(i1, e) + 4 * at(i1, e - 1) - at(i1, e - 2)) / (2 * cs.h2));
  }
  if (defect > 1e-8 + 2.0 * curvature)
    throw AssumptionViolation("Assumption 3.3 (boundary potential with zero normal derivative)",
                              "one-sided normal derivative of V_b reaches " + std::to_string(defect));
}

}  // namespace nanowire
