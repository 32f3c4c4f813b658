#pragma once

#include "nanowire/types.hpp"

namespace nanowire {

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for an SPD operator given as
/// callables; stops on ||r|| <= rtol ||b||.
template <typename Apply, typename Precond>
CgResult conjugate_gradient(Apply&& apply, Precond&& precond, const Vector& b, double rtol, int max_iter) {
  CgResult out;
  out.x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Vector r = b;
  Vector z = precond(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Vector Ap = apply(p);
    const double a = rz / p.dot(Ap);
    out.x += a * p;
    r -= a * Ap;
    out.iterations = it;
    out.relative_residual = r.norm() / bnorm;
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return out;
}

}  // namespace nanowire
