#pragma once

#include "nanowire/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace nanowire {

struct LanczosOptions {
  int krylov_dim = 40;
  double tol = 1e-9;  // on ||A x - E x|| for unit x
  int max_runs = 40;
  std::uint64_t seed = 20240607;
};

struct EigenPairs {
  Vector values;
  Matrix vectors;  // unit Euclidean norm columns
  Vector residuals;
  int runs = 0;
};

namespace detail {

inline void orthogonalize(Eigen::Ref<Vector> v, const Matrix& basis, Eigen::Index cols) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < cols; ++j) v -= basis.col(j).dot(v) * basis.col(j);
}

}  // namespace detail

/// Lowest `count` eigenpairs of a symmetric operator A by Lanczos on the
/// shift-inverted operator (A - shift)^-1 with full reorthogonalization.
///
/// Converged Ritz pairs are locked and later runs restart from a fresh random
/// vector orthogonal to everything locked; this recovers all members of a
/// degenerate eigenspace, which a single Krylov sequence cannot. The search
/// stops once a run started with `count` pairs locked finds nothing below the
/// current count-th value.
///
/// `apply(x)` returns A x and `solve_shifted(b)` returns (A - shift)^-1 b.
template <typename Apply, typename Solve>
EigenPairs shift_invert_lanczos(Eigen::Index n, int count, Apply&& apply, Solve&& solve_shifted, double shift,
                                const LanczosOptions& opts) {
  require(count >= 1 && count < n, "requested eigenpair count must lie in [1, n)");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix locked(n, 0);
  std::vector<double> locked_values;
  std::vector<double> locked_residuals;
  int krylov_dim = opts.krylov_dim;
  double best_unconverged = std::numeric_limits<double>::infinity();

  auto kth_value = [&]() {
    if (static_cast<int>(locked_values.size()) < count) return std::numeric_limits<double>::infinity();
    std::vector<double> v = locked_values;
    std::nth_element(v.begin(), v.begin() + (count - 1), v.end());
    return v[count - 1];
  };

  int runs = 0;
  for (; runs < opts.max_runs; ++runs) {
    const double kth_at_start = kth_value();
    const Eigen::Index free_dim = n - locked.cols();
    if (free_dim <= 0) break;
    const int m = static_cast<int>(std::min<Eigen::Index>(krylov_dim, free_dim));

    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    detail::orthogonalize(v, locked, locked.cols());
    v.normalize();

    Matrix Q(n, m);
    Vector alpha(m), beta(m);
    int steps = 0;
    for (int j = 0; j < m; ++j) {
      Q.col(j) = v;
      Vector w = solve_shifted(v);
      detail::orthogonalize(w, locked, locked.cols());
      alpha(j) = v.dot(w);
      detail::orthogonalize(w, Q, j + 1);
      beta(j) = w.norm();
      steps = j + 1;
      if (beta(j) <= 1e-13 * std::abs(alpha(j))) break;
      v = w / beta(j);
    }

    Matrix T = Matrix::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      T(j, j) = alpha(j);
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);

    double new_low = std::numeric_limits<double>::infinity();
    int converged_here = 0;
    for (int i = steps - 1; i >= 0; --i) {
      const double theta = es.eigenvalues()(i);
      if (theta <= 0.0) continue;
      const double value = shift + 1.0 / theta;
      Vector x = Q.leftCols(steps) * es.eigenvectors().col(i);
      x.normalize();
      const double res = (apply(x) - value * x).norm();
      if (res <= opts.tol) {
        detail::orthogonalize(x, locked, locked.cols());
        x.normalize();
        locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
        locked.col(locked.cols() - 1) = x;
        locked_values.push_back(value);
        locked_residuals.push_back(res);
        new_low = std::min(new_low, value);
        ++converged_here;
      } else {
        best_unconverged = std::min(best_unconverged, res);
      }
    }

    if (converged_here == 0) krylov_dim = std::min<int>(2 * krylov_dim, static_cast<int>(n));
    if (std::isfinite(kth_at_start) && !(new_low < kth_at_start - opts.tol)) {
      ++runs;
      break;
    }
  }

  if (static_cast<int>(locked_values.size()) < count)
    throw ConvergenceError("shift-invert Lanczos did not converge " + std::to_string(count) + " eigenpairs",
                           best_unconverged);

  std::vector<int> order(locked_values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return locked_values[a] < locked_values[b]; });

  EigenPairs out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  out.residuals.resize(count);
  out.runs = runs;
  for (int i = 0; i < count; ++i) {
    out.values(i) = locked_values[order[i]];
    out.vectors.col(i) = locked.col(order[i]);
    out.residuals(i) = locked_residuals[order[i]];
  }
  return out;
}

}  // namespace nanowire
