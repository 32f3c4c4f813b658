#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nanowire/poisson.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace nanowire;
using std::numbers::pi;

namespace {

DeviceGrid device(int nx, int nz, double L = 1.0) {
  return DeviceGrid(AxialGrid(nx, L), CrossSectionGrid(nz, nz, 1.0, 1.0));
}

Matrix sample(const DeviceGrid& g, const std::function<double(double, double, double)>& f) {
  Matrix V(g.n_z(), g.n_x());
  for (int i = 0; i < g.n_x(); ++i)
    for (int i2 = 0; i2 < g.cross.n2; ++i2)
      for (int i1 = 0; i1 < g.cross.n1; ++i1) V(g.cross.index(i1, i2), i) = f(g.axis.x(i), g.cross.z1(i1), g.cross.z2(i2));
  return V;
}

double manufactured(double x, double z1, double z2, double L) {
  return std::sin(pi * x / L) * std::cos(pi * z1) * std::cos(pi * z2);
}

bool nonincreasing(const std::vector<double>& J) {
  for (std::size_t k = 1; k < J.size(); ++k)
    if (J[k] > J[k - 1] + 1e-13 * (1.0 + std::abs(J[k - 1]))) return false;
  return true;
}

}  // namespace

TEST_CASE("stiffness matrix is the Dirichlet energy") {
  const auto g = device(7, 6);
  const PoissonOperator op(g);
  const Matrix K = Matrix(op.stiffness());
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  const Matrix V = Matrix::NullaryExpr(g.n_z(), g.n_x(), [&] { return N(rng); });
  const Eigen::Map<const Vector> v(V.data(), V.size());
  CHECK(v.dot(K * v) == doctest::Approx(gradient_norm_squared(V, g)).epsilon(1e-12));
  // constants are in the kernel of the full operator
  CHECK(op.laplacian(Matrix::Constant(g.n_z(), g.n_x(), 3.0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reduced operator is positive definite") {
  const auto g = device(5, 4);
  const PoissonOperator op(g);
  Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(op.interior_stiffness())};
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("manufactured solution: stencil consistency and solve converge at second order") {
  const double L = 1.0;
  std::vector<double> stencil_err, solve_err;
  for (int n : {9, 17, 33}) {
    const auto g = device(n, n, L);
    const PoissonOperator op(g);
    const Matrix V = sample(g, [&](double x, double a, double b) { return manufactured(x, a, b, L); });
    const double lam = pi * pi / (L * L) + 2 * pi * pi;
    const Matrix lap = op.laplacian(V);
    stencil_err.push_back((lap - lam * V).middleCols(1, n - 2).cwiseAbs().maxCoeff());
    const Matrix sol = op.solve(lam * V, Vector::Zero(g.n_z()));
    solve_err.push_back(discrete_norm(Matrix(sol - V), g, NormKind::L2));
  }
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(std::log2(stencil_err[k - 1] / stencil_err[k]) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::log2(solve_err[k - 1] / solve_err[k]) == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("functional derivatives agree with finite differences") {
  const auto g = device(7, 7);
  const PoissonOperator op(g);
  const auto bands = free_subbands(g.cross, 3);
  const Vector Ns = Vector::LinSpaced(g.n_x(), 0.5, 2.0);
  const PoissonFunctional J(op, bands, Ns, 0.2);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N;
  Matrix V = Matrix::NullaryExpr(g.n_z(), g.n_x(), [&] { return 0.3 * N(rng); });
  Matrix dir = Matrix::Zero(g.n_z(), g.n_x());
  dir.middleCols(1, g.n_x() - 2) = Matrix::NullaryExpr(g.n_z(), g.n_x() - 2, [&] { return N(rng); });
  const double t = 1e-6;
  const double fd = (J.value(V + t * dir) - J.value(V - t * dir)) / (2 * t);
  const double an = J.gradient(V).cwiseProduct(dir).sum();
  CHECK(fd == doctest::Approx(an).epsilon(1e-6));

  const Matrix inner = dir.middleCols(1, g.n_x() - 2);
  const Vector d = Eigen::Map<const Vector>(inner.data(), inner.size());
  const Vector Hd = J.hessian_apply(J.weights_at(V), d);
  const Matrix gp = J.gradient(V + t * dir), gm = J.gradient(V - t * dir);
  const Matrix dg = ((gp - gm) / (2 * t)).middleCols(1, g.n_x() - 2);
  CHECK((Hd - Eigen::Map<const Vector>(dg.data(), dg.size())).norm() <= 1e-6 * Hd.norm());
}

TEST_CASE("Newton on the functional: trivial cases") {
  const auto g = device(9, 9);
  const PoissonOperator op(g);
  const auto bands = free_subbands(g.cross, 3);
  const Vector zeroN = Vector::Zero(g.n_x());
  PoissonOptions opt;
  SUBCASE("no charge, zero boundary") {
    const auto r = solve_nonlinear_poisson(op, zeroN, bands, Vector::Zero(g.n_z()), opt);
    CHECK(r.V.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("no charge, compatible boundary: harmonic extension") {
    Vector Vb(g.n_z());
    for (int i2 = 0; i2 < g.cross.n2; ++i2)
      for (int i1 = 0; i1 < g.cross.n1; ++i1) Vb(g.cross.index(i1, i2)) = std::cos(pi * g.cross.z1(i1));
    const auto r = solve_nonlinear_poisson(op, zeroN, bands, Vb, opt);
    const Matrix lin = op.solve(Matrix::Zero(g.n_z(), g.n_x()), Vb);
    CHECK((r.V - lin).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Newton on the functional: nonlinear manufactured problem") {
  const double L = 1.0;
  std::vector<double> err;
  for (int n : {9, 17, 33}) {
    const auto g = device(n, n, L);
    const PoissonOperator op(g);
    const auto bands = free_subbands(g.cross, 4);
    const Matrix Vex = sample(g, [&](double x, double a, double b) { return manufactured(x, a, b, L); });
    Vector Ns(g.n_x());
    for (int i = 0; i < g.n_x(); ++i) Ns(i) = 2.0 + std::cos(2 * pi * g.axis.x(i));
    // source chosen so the exact field solves the nonlinear equation on every grid
    const double lam = pi * pi / (L * L) + 2 * pi * pi;
    const Matrix S = effective_quantities(Vex, bands, g.cross).S;
    const Matrix source = lam * Vex - S * Ns.asDiagonal();
    PoissonOptions opt;
    const auto r = solve_nonlinear_poisson(op, Ns, bands, Vector::Zero(g.n_z()), opt, Matrix(), source);
    CHECK(r.gradient_norm.back() <= 1e-10);
    CHECK(nonincreasing(r.J));
    err.push_back(discrete_norm(Matrix(r.V - Vex), g, NormKind::L2));
  }
  for (std::size_t k = 1; k < 3; ++k) CHECK(std::log2(err[k - 1] / err[k]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("damped fixed-point iteration reaches the Newton answer at small charge") {
  const auto g = device(11, 9);
  const PoissonOperator op(g);
  const auto bands = free_subbands(g.cross, 3);
  const Vector Ns = Vector::Constant(g.n_x(), 0.5);
  const Vector Vb = Vector::Zero(g.n_z());
  PoissonOptions opt;
  opt.epsilon = 0.15;
  const auto newton = solve_nonlinear_poisson(op, Ns, bands, Vb, opt);
  CHECK(nonincreasing(newton.J));
  const Mollifier R(g, opt.epsilon);
  Matrix V = Matrix::Zero(g.n_z(), g.n_x());
  for (int k = 0; k < 200; ++k) {
    const Matrix S = effective_quantities(R.apply(V), bands, g.cross).S;
    const Matrix next = op.solve(R.apply(S * Ns.asDiagonal()), Vb);
    const double change = (next - V).cwiseAbs().maxCoeff();
    V = 0.5 * V + 0.5 * next;
    if (change < 1e-13) break;
  }
  CHECK((V - newton.V).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("continuity in the surface density") {
  const auto g = device(11, 9);
  const PoissonOperator op(g);
  const auto bands = free_subbands(g.cross, 3);
  const Vector Vb = Vector::Zero(g.n_z());
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PoissonOptions opt;
  for (int k = 0; k < 10; ++k) {
    const Vector A = Vector::NullaryExpr(g.n_x(), [&] { return 3.0 * U(rng); });
    const Vector B = Vector::NullaryExpr(g.n_x(), [&] { return 3.0 * U(rng); });
    const auto ra = solve_nonlinear_poisson(op, A, bands, Vb, opt);
    const auto rb = solve_nonlinear_poisson(op, B, bands, Vb, opt);
    const Matrix dV = ra.V - rb.V;
    // energy inequality: |grad dV|^2 <= ||dN||_1 max_x |<dV, S[V_a]>|
    const Matrix proj = (ra.eq.S.cwiseProduct(dV)).transpose() * g.cross.weights;
    const double rhs = discrete_norm(Vector(A - B), g.axis, NormKind::L1) * proj.cwiseAbs().maxCoeff();
    CHECK(gradient_norm_squared(dV, g) <= rhs * (1 + 1e-9));
  }
}
