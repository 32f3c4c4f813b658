#pragma once

#include "nanowire/grids.hpp"

namespace nanowire {

enum class MollifyDirection { X, Z, Both };

/// 1D convolution matrix with a smooth even bump of radius eps, applied to
/// the zero extension of nodal data: A(i, j) = k((i - j) h) w_j with
/// trapezoid weights w. The kernel is normalized so sum_d k(d h) h = 1, and
/// eps below the spacing gives the identity.
Matrix mollifier_matrix(int n, double h, double eps);

/// Regularization operator on device fields: R F = A_z F A_x^T, with the
/// cross-section part a product of the two transverse 1D matrices.
/// Self-adjoint in the quadrature inner product.
class Mollifier {
 public:
  Mollifier() = default;
  Mollifier(const DeviceGrid& grid, double epsilon, MollifyDirection direction = MollifyDirection::Both);

  Matrix apply(const Matrix& field) const;
  /// Euclidean transpose R^T, the adjoint without quadrature weights.
  Matrix apply_transpose(const Matrix& field) const;

  double epsilon() const { return eps_; }
  bool is_identity() const { return identity_; }
  const Matrix& axial() const { return ax_; }
  const Matrix& transverse1() const { return a1_; }
  const Matrix& transverse2() const { return a2_; }

 private:
  Matrix apply_cross(const Matrix& F, const Matrix& a1, const Matrix& a2) const;
  double eps_ = 0.0;
  bool identity_ = true;
  int n1_ = 0, n2_ = 0;
  Matrix ax_, a1_, a2_;
};

}  // namespace nanowire
