#include "nanowire/poisson.hpp"

#include "nanowire/cg.hpp"

#include <cmath>

namespace nanowire {

namespace {

// Edge list of the Dirichlet energy: (a, b, coefficient) with the energy
// contribution c (V_a - V_b)^2, flat indices k + n_z * i.
template <typename F>
void for_each_edge(const DeviceGrid& g, F&& edge) {
  const auto& cs = g.cross;
  const int nz = g.n_z();
  const Vector w1 = trapezoid_weights(cs.n1, cs.h1);
  const Vector w2 = trapezoid_weights(cs.n2, cs.h2);
  const double hx = g.axis.h;
  for (int i = 0; i + 1 < g.n_x(); ++i)
    for (int k = 0; k < nz; ++k) edge(k + nz * i, k + nz * (i + 1), cs.weights(k) / hx);
  for (int i = 0; i < g.n_x(); ++i) {
    const double wx = g.axis.weights(i);
    for (int i2 = 0; i2 < cs.n2; ++i2)
      for (int i1 = 0; i1 + 1 < cs.n1; ++i1)
        edge(cs.index(i1, i2) + nz * i, cs.index(i1 + 1, i2) + nz * i, wx * w2(i2) / cs.h1);
    for (int i2 = 0; i2 + 1 < cs.n2; ++i2)
      for (int i1 = 0; i1 < cs.n1; ++i1)
        edge(cs.index(i1, i2) + nz * i, cs.index(i1, i2 + 1) + nz * i, wx * w1(i1) / cs.h2);
  }
}

}  // namespace

PoissonOperator::PoissonOperator(const DeviceGrid& grid) : grid_(grid) {
  const int nz = grid.n_z(), nx = grid.n_x();
  const int n = nz * nx;
  const int lo = nz, hi = nz * (nx - 1);  // interior block [lo, hi)
  std::vector<Triplet> full, inner;
  for_each_edge(grid, [&](int a, int b, double c) {
    full.emplace_back(a, a, c);
    full.emplace_back(b, b, c);
    full.emplace_back(a, b, -c);
    full.emplace_back(b, a, -c);
    const bool ia = a >= lo && a < hi, ib = b >= lo && b < hi;
    if (ia) inner.emplace_back(a - lo, a - lo, c);
    if (ib) inner.emplace_back(b - lo, b - lo, c);
    if (ia && ib) {
      inner.emplace_back(a - lo, b - lo, -c);
      inner.emplace_back(b - lo, a - lo, -c);
    }
  });
  K_.resize(n, n);
  K_.setFromTriplets(full.begin(), full.end());
  Kii_.resize(hi - lo, hi - lo);
  Kii_.setFromTriplets(inner.begin(), inner.end());
  mass_ = grid.weights();
  factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(Kii_);
  if (factor_->info() != Eigen::Success) throw Error("interior Poisson matrix is not positive definite");
}

PoissonOperator assemble_poisson(const DeviceGrid& grid) { return PoissonOperator(grid); }

Matrix PoissonOperator::apply(const Matrix& V) const {
  require(V.rows() == grid_.n_z() && V.cols() == grid_.n_x(), "field shape does not match the device grid");
  Matrix out(V.rows(), V.cols());
  Eigen::Map<Vector>(out.data(), out.size()) = K_ * Eigen::Map<const Vector>(V.data(), V.size());
  return out;
}

Matrix PoissonOperator::laplacian(const Matrix& V) const {
  Matrix out = apply(V).cwiseQuotient(mass_);
  out.col(0).setZero();
  out.col(grid_.n_x() - 1).setZero();
  return out;
}

Vector PoissonOperator::solve_interior(const Vector& r) const {
  require(r.size() == interior_size(), "interior vector has the wrong size");
  return factor_->solve(r);
}

Matrix PoissonOperator::solve(const Matrix& f, const Vector& Vb) const {
  require(f.rows() == grid_.n_z() && f.cols() == grid_.n_x(), "source shape does not match the device grid");
  require(Vb.size() == grid_.n_z(), "boundary potential must have one value per cross-section node");
  Matrix V = Matrix::Zero(grid_.n_z(), grid_.n_x());
  V.col(0) = Vb;
  V.col(grid_.n_x() - 1) = Vb;
  const Matrix r = mass_.cwiseProduct(f) - apply(V);
  const Matrix ri = r.middleCols(1, grid_.n_x() - 2);
  const Vector xi = solve_interior(Eigen::Map<const Vector>(ri.data(), ri.size()));
  V.middleCols(1, grid_.n_x() - 2) = Eigen::Map<const Matrix>(xi.data(), grid_.n_z(), grid_.n_x() - 2);
  return V;
}

// ---------------------------------------------------------------------------

PoissonFunctional::PoissonFunctional(const PoissonOperator& op, const Subbands& bands, const Vector& Ns,
                                     double epsilon, Matrix source)
    : op_(op), bands_(bands), Ns_(Ns), R_(op.grid(), epsilon), source_(std::move(source)) {
  require(Ns.size() == op.grid().n_x(), "surface density does not match the axial grid");
  for (Eigen::Index i = 0; i < Ns.size(); ++i) require(Ns(i) >= 0.0, "surface density must be nonnegative");
  require(bands.g.rows() == op.grid().n_z(), "confinement densities live on a different cross-section");
  if (source_.size() != 0)
    require(source_.rows() == op.grid().n_z() && source_.cols() == op.grid().n_x(), "source shape mismatch");
}

double PoissonFunctional::value(const Matrix& V) const {
  const Matrix RV = R_.apply(V);
  const PartitionFunction pf = effective_potential(project_potential(RV, bands_, op_.grid().cross), bands_.energies);
  double J = 0.5 * (Eigen::Map<const Vector>(V.data(), V.size())).dot(Eigen::Map<const Vector>(op_.apply(V).data(), V.size()));
  // ln Z = -V_s
  J -= op_.grid().axis.weights.cwiseProduct(Ns_).dot(pf.Vs);
  if (source_.size() != 0) J -= op_.mass().cwiseProduct(source_).cwiseProduct(V).sum();
  return J;
}

Matrix PoissonFunctional::weights_at(const Matrix& V) const {
  return band_weights(project_potential(R_.apply(V), bands_, op_.grid().cross), bands_.energies);
}

Matrix PoissonFunctional::gradient(const Matrix& V) const {
  const Matrix w = weights_at(V);
  // d/dV of w_x N_s ln Z(R V) is -R^T[M (N_s S)]
  Matrix charge = op_.mass().cwiseProduct((bands_.g * w) * Ns_.asDiagonal());
  Matrix grad = op_.apply(V) - R_.apply_transpose(charge);
  if (source_.size() != 0) grad -= op_.mass().cwiseProduct(source_);
  return grad;
}

Vector PoissonFunctional::hessian_apply(const Matrix& w, const Vector& d) const {
  const auto& g = op_.grid();
  const int nz = g.n_z(), nx = g.n_x();
  Matrix D = Matrix::Zero(nz, nx);
  D.middleCols(1, nx - 2) = Eigen::Map<const Matrix>(d.data(), nz, nx - 2);
  const Matrix dVnn = project_potential(R_.apply(D), bands_, g.cross);
  Matrix t(w.rows(), w.cols());
  for (int i = 0; i < nx; ++i) {
    const double scale = g.axis.weights(i) * Ns_(i);
    t.col(i) = scale * (w.col(i).cwiseProduct(dVnn.col(i)) - w.col(i) * w.col(i).dot(dVnn.col(i)));
  }
  const Matrix X = g.cross.weights.asDiagonal() * (bands_.g * t);
  const Matrix out = op_.apply(D) + R_.apply_transpose(X);
  const Matrix inner = out.middleCols(1, nx - 2);
  return Eigen::Map<const Vector>(inner.data(), inner.size());
}

// ---------------------------------------------------------------------------

PoissonResult solve_nonlinear_poisson(const PoissonOperator& op, const Vector& Ns, const Subbands& bands,
                                      const Vector& Vb, const PoissonOptions& opts, const Matrix& initial,
                                      const Matrix& source) {
  const auto& grid = op.grid();
  const int nz = grid.n_z(), nx = grid.n_x();
  require(Vb.size() == nz, "boundary potential must have one value per cross-section node");
  const PoissonFunctional J(op, bands, Ns, opts.epsilon, source);

  Matrix V;
  if (initial.size() != 0) {
    require(initial.rows() == nz && initial.cols() == nx, "initial potential has the wrong shape");
    V = initial;
    V.col(0) = Vb;
    V.col(nx - 1) = Vb;
  } else {
    V = op.solve(Matrix::Zero(nz, nx), Vb);
  }

  PoissonResult res;
  auto interior = [&](const Matrix& F) {
    const Matrix b = F.middleCols(1, nx - 2);
    return Vector(Eigen::Map<const Vector>(b.data(), b.size()));
  };

  double Jv = J.value(V);
  for (int it = 0;; ++it) {
    const Vector g = interior(J.gradient(V));
    const Vector Kg = op.solve_interior(g);
    const double dual = std::sqrt(std::max(0.0, g.dot(Kg)));
    res.J.push_back(Jv);
    res.gradient_norm.push_back(dual);
    if (dual <= opts.tol) break;
    if (it >= opts.max_newton) throw ConvergenceError("Newton on the Poisson functional hit max iterations", dual);

    const Matrix w = J.weights_at(V);
    const CgResult cg = conjugate_gradient([&](const Vector& x) { return J.hessian_apply(w, x); },
                                           [&](const Vector& r) { return op.solve_interior(r); }, Vector(-g),
                                           opts.cg_rtol, opts.max_cg);
    res.cg_iterations += cg.iterations;
    const Vector& d = cg.x;
    const double slope = g.dot(d);
    if (!(slope < 0.0)) throw LineSearchError("Newton direction is not a descent direction", dual, V, res.J);

    Matrix step = Matrix::Zero(nz, nx);
    step.middleCols(1, nx - 2) = Eigen::Map<const Matrix>(d.data(), nz, nx - 2);
    // Once the predicted decrease is at rounding level of J, J can no longer
    // discriminate steps; the full Newton step is then taken, since the
    // iteration is inside the quadratic convergence region.
    const bool rounding_level = -slope <= 1e-12 * (1.0 + std::abs(Jv));
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Matrix trial = V + t * step;
      const double Jt = J.value(trial);
      if (rounding_level || Jt <= Jv + 1e-4 * t * slope) {
        V = trial;
        Jv = Jt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw LineSearchError("line search failed on the Poisson functional", dual, V, res.J);
    res.newton_iterations = it + 1;
  }

  res.V = V;
  res.eq = effective_quantities(J.mollifier().apply(V), bands, grid.cross, opts.epsilon);
  return res;
}

}  // namespace nanowire
