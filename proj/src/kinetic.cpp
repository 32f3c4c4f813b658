#include "nanowire/kinetic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nanowire {

MaxwellianTable build_maxwellians(const Vector& energies, const Vector& masses, const Matrix& Vnn,
                                  const MomentumGrid& grid, double max_defect) {
  const int nb = static_cast<int>(energies.size());
  require(nb > 0 && masses.size() == nb, "energies and masses must have one entry per band");
  require(Vnn.rows() == nb && Vnn.cols() > 0, "projected potential must have one row per band");
  for (int b = 0; b < nb; ++b) require(masses(b) > 0.0, "effective masses must be positive");

  MaxwellianTable t;
  t.grid = grid;
  t.n_bands = nb;
  t.masses = masses;
  const int np = grid.n, nx = static_cast<int>(Vnn.cols());
  t.normalized.resize(nb * np, nx);
  t.plain.resize(nb * np, nx);
  t.log_Z.resize(nx);
  t.velocity.resize(nb * np);
  t.weights.resize(nb * np);
  for (int b = 0; b < nb; ++b)
    for (int j = 0; j < np; ++j) {
      t.velocity(t.row(b, j)) = grid.nodes(j) / masses(b);
      t.weights(t.row(b, j)) = grid.weights(j);
    }

  Vector gauss_mass(nb);
  std::vector<Vector> gauss(nb);
  for (int b = 0; b < nb; ++b) {
    gauss[b] = (-grid.nodes.array().square() / (2 * masses(b))).exp() / std::sqrt(2 * std::numbers::pi * masses(b));
    gauss_mass(b) = grid.integrate(gauss[b]);
  }

  for (int i = 0; i < nx; ++i) {
    const Vector a = energies + Vnn.col(i);
    const double amin = a.minCoeff();
    const Vector w = (-(a.array() - amin)).exp();
    const double zs = w.sum();
    t.log_Z(i) = std::log(zs) - amin;
    // Boltzmann band weight times a unit-mass Gaussian; the defect is the
    // mass of the Gaussian tails beyond +-p_max
    double tail = 0.0;
    for (int b = 0; b < nb; ++b) {
      tail += w(b) / zs * std::erfc(grid.p_max / std::sqrt(2 * masses(b)));
      t.normalized.block(b * np, i, np, 1) = (w(b) / zs / gauss_mass(b)) * gauss[b];
    }
    t.truncation_defect = std::max(t.truncation_defect, tail);
    t.plain.col(i) = std::exp(t.log_Z(i)) * t.normalized.col(i);
  }
  t.Vs = -t.log_Z;
  if (t.truncation_defect > max_defect) {
    std::ostringstream os;
    os << "momentum truncation defect " << t.truncation_defect << " exceeds " << max_defect << "; increase p_max";
    throw InvalidArgument(os.str());
  }
  return t;
}

// ---------------------------------------------------------------------------

CrossSection CrossSection::constant(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw AssumptionViolation("Assumption 2.2 (symmetric cross-section bounded above and below)",
                              "relaxation time must be positive and finite");
  CrossSection c;
  c.rate_ = c.lower_ = c.upper_ = 1.0 / tau;
  return c;
}

CrossSection CrossSection::table(Matrix alpha, double alpha1, double alpha2) {
  const std::string name = "Assumption 2.2 (symmetric cross-section bounded above and below)";
  if (!(alpha1 > 0.0)) throw AssumptionViolation(name, "alpha1 must be positive");
  if (alpha1 > alpha2) throw AssumptionViolation(name, "alpha1 exceeds alpha2");
  require(alpha.rows() == alpha.cols() && alpha.size() > 0, "cross-section table must be square");
  const double scale = alpha.cwiseAbs().maxCoeff();
  if ((alpha - alpha.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
    throw AssumptionViolation(name, "table is not symmetric");
  if (alpha.minCoeff() < alpha1 || alpha.maxCoeff() > alpha2) {
    std::ostringstream os;
    os << "table range [" << alpha.minCoeff() << ", " << alpha.maxCoeff() << "] leaves [" << alpha1 << ", " << alpha2
       << "]";
    throw AssumptionViolation(name, os.str());
  }
  CrossSection c;
  c.table_ = std::move(alpha);
  c.lower_ = alpha1;
  c.upper_ = alpha2;
  return c;
}

CrossSection CrossSection::gaussian(int n_bands, const MomentumGrid& grid, double alpha1, double alpha2,
                                    double width) {
  require(width > 0.0, "kernel width must be positive");
  const int np = grid.n, K = n_bands * np;
  Matrix a(K, K);
  for (int b = 0; b < n_bands; ++b)
    for (int j = 0; j < np; ++j)
      for (int c = 0; c < n_bands; ++c)
        for (int l = 0; l < np; ++l) {
          const double dp = grid.nodes(j) - grid.nodes(l);
          a(b * np + j, c * np + l) =
              alpha1 + (alpha2 - alpha1) * std::exp(-dp * dp / (2 * width * width)) / (1.0 + std::abs(b - c));
        }
  return table(std::move(a), alpha1, alpha2);
}

Matrix CrossSection::dense(int rows) const {
  if (is_constant()) return Matrix::Constant(rows, rows, rate_);
  require(table_.rows() == rows, "cross-section table does not match the phase-space size");
  return table_;
}

Matrix collision_matrix(const Vector& M, const Vector& w, const CrossSection& alpha) {
  const Matrix A = alpha.dense(static_cast<int>(M.size()));
  Matrix Q = M.asDiagonal() * A * w.asDiagonal();
  Q.diagonal() -= A * w.cwiseProduct(M);
  return Q;
}

Matrix collision_apply(const Matrix& f, const MaxwellianTable& t, const CrossSection& alpha) {
  require(f.rows() == t.rows() && f.cols() == t.n_x(), "distribution shape does not match the Maxwellian table");
  Matrix out(f.rows(), f.cols());
  if (alpha.is_constant()) {
    for (int i = 0; i < f.cols(); ++i) {
      const double N = t.weights.dot(f.col(i));
      const double loss = t.weights.dot(t.normalized.col(i));
      out.col(i) = alpha.rate() * (N * t.normalized.col(i) - loss * f.col(i));
    }
    return out;
  }
  const Matrix A = alpha.dense(t.rows());
  for (int i = 0; i < f.cols(); ++i) {
    const auto M = t.normalized.col(i);
    const Vector gain = A * t.weights.cwiseProduct(f.col(i));
    const Vector loss = A * t.weights.cwiseProduct(M);
    out.col(i) = M.cwiseProduct(gain) - f.col(i).cwiseProduct(loss);
  }
  return out;
}

Matrix kernel_projection(const Matrix& f, const MaxwellianTable& t) {
  const Vector N = f.transpose() * t.weights;
  return t.normalized * N.asDiagonal();
}

double weighted_inner(const Matrix& f, const Matrix& g, const MaxwellianTable& t, const Vector& axial_weights) {
  const Vector per_x = (f.cwiseProduct(g).cwiseQuotient(t.normalized)).transpose() * t.weights;
  return axial_weights.size() == 0 ? per_x.sum() : axial_weights.dot(per_x);
}

ThetaField solve_theta(const MaxwellianTable& t, const CrossSection& alpha) {
  const int K = t.rows(), nx = t.n_x();
  ThetaField out;
  out.Theta.resize(K, nx);
  out.D.resize(nx);
  Matrix B = Matrix::Zero(K + 1, K + 1);
  for (int i = 0; i < nx; ++i) {
    const Vector M = t.normalized.col(i);
    const Matrix Q = collision_matrix(M, t.weights, alpha);
    B.topLeftCorner(K, K) = Q;
    B.block(0, K, K, 1) = M;
    B.block(K, 0, 1, K) = t.weights.transpose();
    Vector rhs = Vector::Zero(K + 1);
    rhs.head(K) = -t.velocity.cwiseProduct(M);
    const Vector sol = Eigen::PartialPivLU<Matrix>(B).solve(rhs);
    const Vector theta = sol.head(K);
    const double scale = rhs.head(K).cwiseAbs().maxCoeff();
    const double res = (Q * theta - rhs.head(K)).cwiseAbs().maxCoeff() / scale;
    out.residual = std::max(out.residual, res);
    if (!(res <= 1e-10)) throw ConvergenceError("Theta system residual above 1e-10", res);
    out.Theta.col(i) = theta;
    out.D(i) = t.weights.dot(t.velocity.cwiseProduct(theta));
  }
  return out;
}

Moments moments(const Matrix& f, const MaxwellianTable& t, double eta) {
  require(f.rows() == t.rows(), "distribution shape does not match the Maxwellian table");
  Moments m;
  m.Ns = f.transpose() * t.weights;
  // mirrored pairs first, so even data carry exactly zero current
  const int np = t.grid.n;
  m.J = Vector::Zero(f.cols());
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    double s = 0.0;
    for (int b = 0; b < t.n_bands; ++b)
      for (int j = 0; j < np / 2; ++j) {
        const int r = t.row(b, j), q = t.row(b, np - 1 - j);
        s += t.weights(r) * t.velocity(r) * (f(r, i) - f(q, i));
      }
    m.J(i) = s / eta;
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

// van Leer reconstruction of the face value downstream of node `mid`, written
// as the convex combination (1 - t) f_mid + t f_down with t = a / (a + b) so
// that rounding cannot make it negative.
double face_value(double up, double mid, double down) {
  const double a = mid - up, b = down - mid;
  if (!(a * b > 0.0)) return mid;
  const double t = a / (a + b);
  return (1.0 - t) * mid + t * down;
}

}  // namespace

KineticSolver::KineticSolver(MaxwellianTable table, const Matrix& Vnn, const AxialGrid& axis, CrossSection alpha,
                             KineticOptions options)
    : table_(std::move(table)), axis_(axis), alpha_(std::move(alpha)), opts_(options) {
  require(opts_.eta > 0.0, "eta must be positive");
  require(table_.n_x() == axis.n && Vnn.cols() == axis.n && Vnn.rows() == table_.n_bands,
          "kinetic fields must match the axial grid");
  require(axis.n >= 3, "kinetic solver needs at least 3 axial nodes");
  const int nx = axis.n;
  p_speed_.resize(table_.n_bands, nx);
  for (int b = 0; b < table_.n_bands; ++b)
    for (int i = 0; i < nx; ++i) {
      double d;
      if (opts_.boundary == AxialBoundary::Periodic) {
        d = (Vnn(b, (i + 1) % nx) - Vnn(b, (i + nx - 1) % nx)) / (2 * axis.h);
      } else if (i == 0) {
        d = (Vnn(b, 1) - Vnn(b, 0)) / axis.h;
      } else if (i == nx - 1) {
        d = (Vnn(b, nx - 1) - Vnn(b, nx - 2)) / axis.h;
      } else {
        d = (Vnn(b, i + 1) - Vnn(b, i - 1)) / (2 * axis.h);
      }
      p_speed_(b, i) = -d / opts_.eta;
    }
}

double KineticSolver::max_stable_dt() const {
  if (!opts_.transport) return std::numeric_limits<double>::infinity();
  const double cx = table_.velocity.cwiseAbs().maxCoeff() / opts_.eta;
  const double wmin = table_.grid.weights.minCoeff();
  const double rate = 2.0 * cx / axis_.h + p_speed_.cwiseAbs().maxCoeff() / wmin;
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

double KineticSolver::mass(const Matrix& f) const { return axis_.h * (f.transpose() * table_.weights).sum(); }

Matrix KineticSolver::transport_rate(const Matrix& f) const {
  const int K = table_.rows(), nx = axis_.n, np = table_.grid.n;
  const bool periodic = opts_.boundary == AxialBoundary::Periodic;
  Matrix L = Matrix::Zero(K, nx);
  std::vector<double> ext(nx + 4), flux(nx + 1);
  for (int k = 0; k < K; ++k) {
    const double c = table_.velocity(k) / opts_.eta;
    if (c == 0.0) continue;
    for (int i = 0; i < nx; ++i) ext[i + 2] = f(k, i);
    if (periodic) {
      ext[0] = f(k, nx - 2);
      ext[1] = f(k, nx - 1);
      ext[nx + 2] = f(k, 0);
      ext[nx + 3] = f(k, 1);
    } else if (c > 0.0) {  // inflow on the left
      ext[0] = ext[1] = 0.0;
      ext[nx + 2] = ext[nx + 3] = f(k, nx - 1);
    } else {
      ext[0] = ext[1] = f(k, 0);
      ext[nx + 2] = ext[nx + 3] = 0.0;
    }
    // face q sits between ext[q + 1] and ext[q + 2], i.e. left of node q
    for (int q = 0; q <= nx; ++q) {
      const int l = q + 1, r = q + 2;
      flux[q] = c > 0.0 ? c * face_value(ext[l - 1], ext[l], ext[r]) : c * face_value(ext[r + 1], ext[r], ext[l]);
    }
    for (int i = 0; i < nx; ++i) L(k, i) = (flux[i + 1] - flux[i]) / axis_.h;
  }
  for (int i = 0; i < nx; ++i)
    for (int b = 0; b < table_.n_bands; ++b) {
      const double a = p_speed_(b, i);
      if (a == 0.0) continue;
      const int r0 = b * np;
      double left = 0.0;  // no flux through -p_max
      for (int j = 0; j < np; ++j) {
        const double right = j + 1 < np ? (a > 0.0 ? a * f(r0 + j, i) : a * f(r0 + j + 1, i)) : 0.0;
        L(r0 + j, i) += (right - left) / table_.grid.weights(j);
        left = right;
      }
    }
  return L;
}

Matrix KineticSolver::collide(const Matrix& f, double dt) {
  const double c = dt / (opts_.eta * opts_.eta);
  if (alpha_.is_constant()) {
    const double kappa = c * alpha_.rate();
    const Vector N = f.transpose() * table_.weights;
    return (f + kappa * table_.normalized * N.asDiagonal()) / (1.0 + kappa);
  }
  if (dt != cached_dt_) {
    lu_.clear();
    for (int i = 0; i < axis_.n; ++i) {
      Matrix A = -c * collision_matrix(table_.normalized.col(i), table_.weights, alpha_);
      A.diagonal().array() += 1.0;
      lu_.emplace_back(A);
    }
    cached_dt_ = dt;
  }
  Matrix out(f.rows(), f.cols());
  for (int i = 0; i < axis_.n; ++i) out.col(i) = lu_[i].solve(f.col(i));
  return out;
}

Matrix KineticSolver::step(const Matrix& f, double dt) {
  require(f.rows() == table_.rows() && f.cols() == axis_.n, "distribution shape does not match the solver");
  require(dt > 0.0, "time step must be positive");
  Matrix next = f;
  if (opts_.transport) {
    const double limit = max_stable_dt();
    if (dt > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "time step " << dt << " violates the transport CFL limit " << limit;
      throw InvalidArgument(os.str());
    }
    next -= dt * transport_rate(f);
  }
  if (opts_.collisions) next = collide(next, dt);
  if ((next.array() < 0.0).any()) {
    Eigen::Index r, c;
    const double v = next.minCoeff(&r, &c);
    std::ostringstream os;
    os << "negative distribution value " << v << " at row " << r << ", axial node " << c;
    throw Error(os.str());
  }
  return next;
}

Matrix advance_boltzmann(const Matrix& f, const MaxwellianTable& table, const Matrix& Vnn, const AxialGrid& axis,
                         const CrossSection& alpha, const KineticOptions& options, double dt) {
  KineticSolver s(table, Vnn, axis, alpha, options);
  return s.step(f, dt);
}

}  // namespace nanowire
