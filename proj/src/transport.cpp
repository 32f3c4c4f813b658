#include "nanowire/transport.hpp"

#include "nanowire/electrostatics.hpp"

#include <cmath>

namespace nanowire {

double bernoulli(double s) {
  if (std::abs(s) < 1e-4) return 1.0 - s / 2.0 + s * s / 12.0 - s * s * s * s / 720.0;
  if (s > 700.0) return s * std::exp(-s);
  return s / std::expm1(s);
}

double sg_flux(double Nl, double Nr, double Vl, double Vr, double D, double h) {
  const double d = Vr - Vl;
  return D / h * (bernoulli(-d) * Nr - bernoulli(d) * Nl);
}

Vector face_diffusion(const Vector& D) {
  const Eigen::Index n = D.size();
  Vector f(n - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) f(i) = 2.0 * D(i) * D(i + 1) / (D(i) + D(i + 1));
  return f;
}

Vector solve_tridiagonal(Vector a, Vector b, Vector c, Vector r) {
  const Eigen::Index n = b.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    if (b(i - 1) == 0.0) throw Error("singular tridiagonal system");
    const double m = a(i) / b(i - 1);
    b(i) -= m * c(i - 1);
    r(i) -= m * r(i - 1);
  }
  if (b(n - 1) == 0.0) throw Error("singular tridiagonal system");
  Vector x(n);
  x(n - 1) = r(n - 1) / b(n - 1);
  for (Eigen::Index i = n - 1; i-- > 0;) x(i) = (r(i) - c(i) * x(i + 1)) / b(i);
  return x;
}

namespace {

void check_inputs(const Vector& Vs, const Vector& D, const AxialGrid& grid) {
  require(Vs.size() == grid.n && D.size() == grid.n, "fields must match the axial grid");
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (!(D(i) > 0.0)) throw AssumptionViolation("Assumption 3.1 (0 < D1 <= D <= D2)", "D = " + std::to_string(D(i)));
}

// Rows of the implicit operator on interior nodes: inv_dt * N - (F_{i+1/2} - F_{i-1/2}) / h
Vector solve_system(const Vector& Vs, const Vector& D, const AxialGrid& grid, const DirichletData& bc, double inv_dt,
                    const Vector& rhs_interior) {
  const int n = grid.n, m = n - 2;
  const double h2 = grid.h * grid.h;
  const Vector Df = face_diffusion(D);
  Vector a(m), b(m), c(m), r = rhs_interior;
  for (int k = 0; k < m; ++k) {
    const int i = k + 1;
    const double dp = Vs(i + 1) - Vs(i), dm = Vs(i) - Vs(i - 1);
    const double up = Df(i) / h2, um = Df(i - 1) / h2;
    b(k) = inv_dt + up * bernoulli(dp) + um * bernoulli(-dm);
    c(k) = -up * bernoulli(-dp);
    a(k) = -um * bernoulli(dm);
  }
  r(0) -= a(0) * bc.left;
  r(m - 1) -= c(m - 1) * bc.right;
  a(0) = 0.0;
  c(m - 1) = 0.0;
  Vector N(n);
  N(0) = bc.left;
  N(n - 1) = bc.right;
  N.segment(1, m) = solve_tridiagonal(a, b, c, r);
  return N;
}

}  // namespace

Vector advance_density(const Vector& N, const Vector& Vs, const Vector& D, double dt, const AxialGrid& grid,
                       const DirichletData& bc, const Vector& source) {
  require(dt > 0.0, "time step must be positive");
  require(N.size() == grid.n, "density must match the axial grid");
  check_inputs(Vs, D, grid);
  Vector rhs = N.segment(1, grid.n - 2) / dt;
  if (source.size() != 0) {
    require(source.size() == grid.n, "source must match the axial grid");
    rhs += source.segment(1, grid.n - 2);
  }
  return solve_system(Vs, D, grid, bc, 1.0 / dt, rhs);
}

Vector steady_state(const Vector& Vs, const Vector& D, const AxialGrid& grid, const DirichletData& bc) {
  check_inputs(Vs, D, grid);
  return solve_system(Vs, D, grid, bc, 0.0, Vector::Zero(grid.n - 2));
}

Vector current(const Vector& N, const Vector& Vs, const Vector& D, const AxialGrid& grid) {
  require(N.size() == grid.n, "density must match the axial grid");
  check_inputs(Vs, D, grid);
  const Vector Df = face_diffusion(D);
  Vector J(grid.n - 1);
  for (int i = 0; i + 1 < grid.n; ++i) J(i) = -sg_flux(N(i), N(i + 1), Vs(i), Vs(i + 1), Df(i), grid.h);
  return J;
}

Vector diffusion_constant_alpha(const Vector& energies, const Vector& masses, const Matrix& Vnn, double tau) {
  require(tau > 0.0, "relaxation time must be positive");
  require(masses.size() == energies.size(), "one mass per band");
  for (Eigen::Index n = 0; n < masses.size(); ++n) require(masses(n) > 0.0, "effective masses must be positive");
  const Matrix w = band_weights(Vnn, energies);
  return tau * (w.transpose() * masses.cwiseInverse());
}

void check_diffusion_bounds(const Vector& D, double D1, double D2) {
  if (!(D1 > 0.0) || D1 > D2)
    throw AssumptionViolation("Assumption 3.1 (0 < D1 <= D <= D2)",
                              "bounds D1 = " + std::to_string(D1) + ", D2 = " + std::to_string(D2));
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (D(i) < D1 || D(i) > D2)
      throw AssumptionViolation("Assumption 3.1 (0 < D1 <= D <= D2)",
                                "D = " + std::to_string(D(i)) + " at node " + std::to_string(i));
}

}  // namespace nanowire
