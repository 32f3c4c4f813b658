#pragma once

#include "nanowire/electrostatics.hpp"
#include "nanowire/mollifier.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace nanowire {

/// Discrete -Lap with Dirichlet data at x = 0, L and homogeneous Neumann
/// conditions on the cross-section boundary (ghost reflection).
///
/// Stored in weak form: K is the Dirichlet-energy matrix, V^T K V equals
/// gradient_norm_squared(V), and K = M (-Lap_h) with M the quadrature mass.
/// Device fields are flattened column-major (cross-section index fastest),
/// so the interior axial columns occupy one contiguous block.
class PoissonOperator {
 public:
  explicit PoissonOperator(const DeviceGrid& grid);

  const DeviceGrid& grid() const { return grid_; }
  const SparseMatrix& stiffness() const { return K_; }
  const SparseMatrix& interior_stiffness() const { return Kii_; }
  const Matrix& mass() const { return mass_; }
  int interior_size() const { return grid_.n_z() * (grid_.n_x() - 2); }

  /// Nodal -Lap_h V; the two Dirichlet columns are returned as zero.
  Matrix laplacian(const Matrix& V) const;
  /// K V for a full field, as a field.
  Matrix apply(const Matrix& V) const;
  /// Solves -Lap_h V = f with V = Vb on both axial ends.
  Matrix solve(const Matrix& f, const Vector& Vb) const;
  /// K_II^{-1} r on a flattened interior vector.
  Vector solve_interior(const Vector& r) const;

 private:
  DeviceGrid grid_;
  SparseMatrix K_, Kii_;
  Matrix mass_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

PoissonOperator assemble_poisson(const DeviceGrid& grid);

struct PoissonOptions {
  double epsilon = 0.0;
  double tol = 1e-10;  // on the gradient in the dual (K^-1) norm
  int max_newton = 60;
  double cg_rtol = 1e-12;
  int max_cg = 1000;
};

struct PoissonResult {
  Matrix V;
  EffectiveQuantities eq;     // at the mollified solution
  std::vector<double> J;      // functional value per Newton iterate
  std::vector<double> gradient_norm;
  int newton_iterations = 0;
  int cg_iterations = 0;
};

/// Newton's method stalled: the line search could not decrease J.
class LineSearchError : public ConvergenceError {
 public:
  LineSearchError(const std::string& what, double attained, Matrix last, std::vector<double> history)
      : ConvergenceError(what, attained), last_iterate(std::move(last)), J_history(std::move(history)) {}
  Matrix last_iterate;
  std::vector<double> J_history;
};

/// The convex functional
///   J(V) = 1/2 V^T K V + sum_x w_x N_s ln Z(R V) - <M source, V>
/// whose critical point solves -Lap V = R[N_s S[R V]] + source.
class PoissonFunctional {
 public:
  PoissonFunctional(const PoissonOperator& op, const Subbands& bands, const Vector& Ns, double epsilon,
                    Matrix source = Matrix());

  double value(const Matrix& V) const;
  /// Full-field gradient; only interior columns are meaningful unknowns.
  Matrix gradient(const Matrix& V) const;
  /// Band occupation weights at R V; the state the Hessian depends on.
  Matrix weights_at(const Matrix& V) const;
  /// Hessian applied to an interior direction (flattened), given weights_at(V).
  Vector hessian_apply(const Matrix& weights, const Vector& direction) const;
  const Mollifier& mollifier() const { return R_; }

 private:
  const PoissonOperator& op_;
  const Subbands& bands_;
  Vector Ns_;
  Mollifier R_;
  Matrix source_;
};

/// Minimizes the functional over fields equal to Vb on the axial ends.
/// `initial` (optional) must have the device shape; its end columns are reset.
PoissonResult solve_nonlinear_poisson(const PoissonOperator& op, const Vector& Ns, const Subbands& bands,
                                      const Vector& Vb, const PoissonOptions& options,
                                      const Matrix& initial = Matrix(), const Matrix& source = Matrix());

}  // namespace nanowire
