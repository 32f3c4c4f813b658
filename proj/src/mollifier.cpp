#include "nanowire/mollifier.hpp"

#include <cmath>

namespace nanowire {

Matrix mollifier_matrix(int n, double h, double eps) {
  require(eps >= 0.0, "mollifier radius must be nonnegative");
  require(eps <= 0.5 * (n - 1) * h + 1e-14, "mollifier radius exceeds half the domain");
  // a radius below the spacing only sees the center node
  if (eps < h) return Matrix::Identity(n, n);
  const Vector w = trapezoid_weights(n, h);
  const int reach = static_cast<int>(std::ceil(eps / h));
  std::vector<double> k(static_cast<std::size_t>(reach) + 1, 0.0);
  k[0] = std::exp(-1.0);
  for (int d = 1; d <= reach; ++d) {
    const double s = d * h / eps;
    if (s < 1.0) k[static_cast<std::size_t>(d)] = std::exp(-1.0 / (1.0 - s * s));
  }
  double mass = k[0];
  for (int d = 1; d <= reach; ++d) mass += 2.0 * k[static_cast<std::size_t>(d)];
  for (double& v : k) v /= mass * h;

  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - reach); j <= std::min(n - 1, i + reach); ++j)
      a(i, j) = k[static_cast<std::size_t>(std::abs(i - j))] * w(j);
  return a;
}

Mollifier::Mollifier(const DeviceGrid& g, double epsilon, MollifyDirection dir)
    : eps_(epsilon), n1_(g.cross.n1), n2_(g.cross.n2) {
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  const bool in_x = dir != MollifyDirection::Z;
  const bool in_z = dir != MollifyDirection::X;
  ax_ = in_x ? mollifier_matrix(g.n_x(), g.axis.h, epsilon) : Matrix::Identity(g.n_x(), g.n_x());
  a1_ = in_z ? mollifier_matrix(g.cross.n1, g.cross.h1, epsilon) : Matrix::Identity(n1_, n1_);
  a2_ = in_z ? mollifier_matrix(g.cross.n2, g.cross.h2, epsilon) : Matrix::Identity(n2_, n2_);
  identity_ = ax_.isIdentity(0.0) && a1_.isIdentity(0.0) && a2_.isIdentity(0.0);
}

Matrix Mollifier::apply_cross(const Matrix& F, const Matrix& a1, const Matrix& a2) const {
  Matrix out(F.rows(), F.cols());
  for (Eigen::Index c = 0; c < F.cols(); ++c) {
    const Eigen::Map<const Matrix> slab(F.col(c).data(), n1_, n2_);
    Eigen::Map<Matrix>(out.col(c).data(), n1_, n2_) = a1 * slab * a2.transpose();
  }
  return out;
}

Matrix Mollifier::apply(const Matrix& F) const {
  require(F.rows() == n1_ * n2_ && F.cols() == ax_.rows(), "field shape does not match the mollifier grid");
  if (identity_) return F;
  return apply_cross(F, a1_, a2_) * ax_.transpose();
}

Matrix Mollifier::apply_transpose(const Matrix& F) const {
  require(F.rows() == n1_ * n2_ && F.cols() == ax_.rows(), "field shape does not match the mollifier grid");
  if (identity_) return F;
  return apply_cross(F, a1_.transpose(), a2_.transpose()) * ax_;
}

}  // namespace nanowire
