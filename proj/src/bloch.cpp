#include "nanowire/bloch.hpp"
#include "nanowire/cg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

namespace nanowire {

namespace {

// -d^2 on n periodic nodes
Matrix periodic_second_difference(int n, double h) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0 / (h * h);
    a(i, (i + 1) % n) -= 1.0 / (h * h);
    a(i, (i + n - 1) % n) -= 1.0 / (h * h);
  }
  return a;
}

// -d^2 on m interior nodes with homogeneous Dirichlet ends
Matrix dirichlet_second_difference(int m, double h) {
  Matrix a = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 2.0 / (h * h);
    if (i > 0) a(i, i - 1) = -1.0 / (h * h);
    if (i + 1 < m) a(i, i + 1) = -1.0 / (h * h);
  }
  return a;
}

// centered periodic first difference in y applied to every column
Matrix periodic_dy(const Matrix& X, const UnitCellGrid& g) {
  Matrix out(X.rows(), X.cols());
  const int ny = g.n_y;
  const int slabs = g.m1() * g.m2();
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    for (int s = 0; s < slabs; ++s) {
      const int base = s * ny;
      for (int iy = 0; iy < ny; ++iy)
        out(base + iy, c) = (X(base + (iy + 1) % ny, c) - X(base + (iy + ny - 1) % ny, c)) / (2.0 * g.h_y);
    }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

LatticePotential::LatticePotential(const UnitCellGrid& grid, Vector samples)
    : samples_(std::move(samples)), n_y_(grid.n_y), n1_(grid.cross.n1) {
  require(samples_.size() == static_cast<Eigen::Index>(grid.n_y) * grid.cross.size(),
          "lattice potential must have one sample per unit-cell node");
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_(i)) || samples_(i) < 0.0) {
      std::ostringstream os;
      os << "W_L = " << samples_(i) << " at node " << i << " (must be finite and >= 0)";
      throw AssumptionViolation("Assumption 1.1 (nonnegative bounded lattice potential)", os.str());
    }
  }
  sup_ = samples_.size() ? samples_.maxCoeff() : 0.0;
}

LatticePotential LatticePotential::constant(const UnitCellGrid& grid, double value) {
  return LatticePotential(grid, Vector::Constant(static_cast<Eigen::Index>(grid.n_y) * grid.cross.size(), value));
}

LatticePotential LatticePotential::from_function(const UnitCellGrid& grid,
                                                 const std::function<double(double, double, double)>& w) {
  const auto& cs = grid.cross;
  Vector s(static_cast<Eigen::Index>(grid.n_y) * cs.size());
  for (int i2 = 0; i2 < cs.n2; ++i2)
    for (int i1 = 0; i1 < cs.n1; ++i1)
      for (int iy = 0; iy < grid.n_y; ++iy) s(iy + grid.n_y * (i1 + cs.n1 * i2)) = w(grid.y(iy), cs.z1(i1), cs.z2(i2));
  return LatticePotential(grid, std::move(s));
}

std::string LatticePotential::hash() const {
  return fnv1a_hex(samples_.data(), sizeof(double) * static_cast<std::size_t>(samples_.size()));
}

SparseMatrix assemble_hamiltonian(const LatticePotential& w, const UnitCellGrid& g) {
  require(w.samples().size() == static_cast<Eigen::Index>(g.n_y) * g.cross.size(),
          "lattice potential does not live on this unit-cell grid");
  const int ny = g.n_y, m1 = g.m1(), m2 = g.m2();
  const double cy = 0.5 / (g.h_y * g.h_y), c1 = 0.5 / (g.cross.h1 * g.cross.h1), c2 = 0.5 / (g.cross.h2 * g.cross.h2);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(g.unknowns()) * 7);
  for (int j2 = 0; j2 < m2; ++j2)
    for (int j1 = 0; j1 < m1; ++j1)
      for (int iy = 0; iy < ny; ++iy) {
        const int r = g.unknown(iy, j1, j2);
        t.emplace_back(r, r, 2.0 * (cy + c1 + c2) + w.at(iy, j1 + 1, j2 + 1));
        t.emplace_back(r, g.unknown((iy + 1) % ny, j1, j2), -cy);
        t.emplace_back(r, g.unknown((iy + ny - 1) % ny, j1, j2), -cy);
        if (j1 > 0) t.emplace_back(r, g.unknown(iy, j1 - 1, j2), -c1);
        if (j1 + 1 < m1) t.emplace_back(r, g.unknown(iy, j1 + 1, j2), -c1);
        if (j2 > 0) t.emplace_back(r, g.unknown(iy, j1, j2 - 1), -c2);
        if (j2 + 1 < m2) t.emplace_back(r, g.unknown(iy, j1, j2 + 1), -c2);
      }
  SparseMatrix H(g.unknowns(), g.unknowns());
  H.setFromTriplets(t.begin(), t.end());
  return H;
}

// ---------------------------------------------------------------------------

SeparableLaplacian::SeparableLaplacian(const UnitCellGrid& grid) : grid_(grid) {
  Eigen::SelfAdjointEigenSolver<Matrix> ey(periodic_second_difference(grid.n_y, grid.h_y));
  Eigen::SelfAdjointEigenSolver<Matrix> e1(dirichlet_second_difference(grid.m1(), grid.cross.h1));
  Eigen::SelfAdjointEigenSolver<Matrix> e2(dirichlet_second_difference(grid.m2(), grid.cross.h2));
  qy_ = ey.eigenvectors();
  ly_ = ey.eigenvalues().cwiseMax(0.0);
  q1_ = e1.eigenvectors();
  l1_ = e1.eigenvalues();
  q2_ = e2.eigenvectors();
  l2_ = e2.eigenvalues();
}

Vector SeparableLaplacian::apply_modes(const Vector& x, bool forward) const {
  const int ny = grid_.n_y, m1 = grid_.m1(), m2 = grid_.m2();
  Vector out = x;
  // y: columns of an (ny x m1*m2) view
  {
    Eigen::Map<Matrix> v(out.data(), ny, m1 * m2);
    v = forward ? Matrix(qy_.transpose() * v) : Matrix(qy_ * v);
  }
  // z1: each z2 slab is an (ny x m1) block
  for (int j2 = 0; j2 < m2; ++j2) {
    Eigen::Map<Matrix> v(out.data() + static_cast<Eigen::Index>(j2) * ny * m1, ny, m1);
    v = forward ? Matrix(v * q1_) : Matrix(v * q1_.transpose());
  }
  // z2: (ny*m1 x m2) view
  {
    Eigen::Map<Matrix> v(out.data(), ny * m1, m2);
    v = forward ? Matrix(v * q2_) : Matrix(v * q2_.transpose());
  }
  return out;
}

Vector SeparableLaplacian::solve(const Vector& b, double c) const {
  const int ny = grid_.n_y, m1 = grid_.m1();
  Vector hat = apply_modes(b, true);
  for (Eigen::Index k = 0; k < hat.size(); ++k) {
    const int iy = static_cast<int>(k % ny);
    const int j1 = static_cast<int>((k / ny) % m1);
    const int j2 = static_cast<int>(k / (static_cast<Eigen::Index>(ny) * m1));
    hat(k) /= 0.5 * (ly_(iy) + l1_(j1) + l2_(j2)) + c;
  }
  return apply_modes(hat, false);
}

Vector SeparableLaplacian::eigenvalues() const {
  Vector all(grid_.unknowns());
  Eigen::Index k = 0;
  for (int j2 = 0; j2 < grid_.m2(); ++j2)
    for (int j1 = 0; j1 < grid_.m1(); ++j1)
      for (int iy = 0; iy < grid_.n_y; ++iy) all(k++) = 0.5 * (ly_(iy) + l1_(j1) + l2_(j2));
  std::sort(all.data(), all.data() + all.size());
  return all;
}

// ---------------------------------------------------------------------------

BlochSpectrum solve_bloch(const SparseMatrix& H, const LatticePotential& w, const UnitCellGrid& grid,
                          const BlochOptions& opts) {
  const int n = grid.unknowns();
  require(H.rows() == n && H.cols() == n, "Hamiltonian size does not match the unit-cell grid");
  require(opts.n_bands >= 1 && opts.n_bands < n, "n_bands must lie in [1, number of interior unknowns)");

  const SeparableLaplacian lap(grid);
  const Vector free_all = lap.eigenvalues();

  double w_min = std::numeric_limits<double>::infinity(), w_mean = 0.0;
  for (int j2 = 0; j2 < grid.m2(); ++j2)
    for (int j1 = 0; j1 < grid.m1(); ++j1)
      for (int iy = 0; iy < grid.n_y; ++iy) {
        const double v = w.at(iy, j1 + 1, j2 + 1);
        w_min = std::min(w_min, v);
        w_mean += v;
      }
  w_mean /= n;

  // E_1 >= free ground level + min W, so this shift keeps H - shift positive definite
  const double shift = 0.5 * (free_all(0) + w_min);
  SparseMatrix A = H;
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= shift;
  const double pc_shift = w_mean - shift;
  auto precond = [&](const Vector& r) { return lap.solve(r, pc_shift); };
  auto solve_shifted = [&](const Vector& b) {
    CgResult r = conjugate_gradient([&](const Vector& x) -> Vector { return A * x; }, precond, b, 1e-13, 2000);
    if (!r.converged) throw ConvergenceError("shifted Bloch solve did not converge", r.relative_residual);
    return r.x;
  };
  auto apply = [&](const Vector& x) -> Vector { return H * x; };

  LanczosOptions lo = opts.lanczos;
  lo.tol = opts.eig_tol;
  const EigenPairs ep = shift_invert_lanczos(n, opts.n_bands, apply, solve_shifted, shift, lo);

  BlochSpectrum s;
  s.grid = grid;
  s.n_bands = opts.n_bands;
  s.energies = ep.values;
  s.residuals = ep.residuals;
  s.free_energies = free_all.head(opts.n_bands);
  s.eigenfunctions = ep.vectors / std::sqrt(grid.cell_volume());
  for (int b = 0; b < opts.n_bands; ++b) {
    auto col = s.eigenfunctions.col(b);
    const double thresh = 1e-8 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < col.size(); ++i)
      if (std::abs(col(i)) > thresh) {
        if (col(i) < 0.0) col = -col;
        break;
      }
  }
  s.potential_sup = w.sup_norm();
  s.potential_hash = w.hash();
  return s;
}

std::pair<Matrix, double> gradient_matrix_elements(const BlochSpectrum& s) {
  require(s.eigenfunctions.cols() == s.n_bands && s.n_bands > 0, "spectrum has no eigenfunctions");
  const Matrix& X = s.eigenfunctions;
  const Matrix P = s.grid.cell_volume() * (X.transpose() * periodic_dy(X, s.grid));
  const double defect = (P + P.transpose()).cwiseAbs().maxCoeff();
  return {0.5 * (P - P.transpose()), defect};
}

DegenerateCouplingError::DegenerateCouplingError(int a, int b, double gap, double coupling)
    : AssumptionViolation("Assumption 1.2 (simple eigenvalues)",
                          "bands " + std::to_string(a + 1) + " and " + std::to_string(b + 1) + " are degenerate (gap " +
                              std::to_string(gap) + ") but coupled (|P| = " + std::to_string(coupling) +
                              "); no scalar effective mass exists"),
      band_a(a),
      band_b(b) {}

EffectiveMass effective_mass(const BlochSpectrum& s, int n, double degeneracy_tol, double coupling_tol) {
  require(s.grad_elements.rows() == s.n_bands, "gradient matrix elements not computed");
  require(n >= 0 && n < s.n_bands, "band index out of range");
  const Matrix& P = s.grad_elements;
  double sum = 0.0;
  EffectiveMass out;
  for (int k = 0; k < s.n_bands; ++k) {
    if (k == n) continue;
    const double gap = s.energies(n) - s.energies(k);
    if (std::abs(gap) <= degeneracy_tol) {
      if (std::abs(P(n, k)) > coupling_tol) throw DegenerateCouplingError(std::min(n, k), std::max(n, k), gap, P(n, k));
      continue;
    }
    const double term = P(n, k) * P(k, n) / gap;
    sum += term;
    out.remainder = std::abs(2.0 * term);
  }
  const double inv = 1.0 - 2.0 * sum;
  if (!(inv > 0.0))
    throw Error("band " + std::to_string(n + 1) + " has nonpositive inverse effective mass " + std::to_string(inv));
  out.mass = 1.0 / inv;
  return out;
}

std::pair<Vector, Vector> effective_masses(const BlochSpectrum& s, double degeneracy_tol, double coupling_tol) {
  Vector m(s.n_bands), r(s.n_bands);
  for (int n = 0; n < s.n_bands; ++n) {
    const EffectiveMass e = effective_mass(s, n, degeneracy_tol, coupling_tol);
    m(n) = e.mass;
    r(n) = e.remainder;
  }
  return {m, r};
}

Matrix confinement_densities(const BlochSpectrum& s) {
  const auto& g = s.grid;
  const auto& cs = g.cross;
  Matrix out = Matrix::Zero(cs.size(), s.n_bands);
  for (int b = 0; b < s.n_bands; ++b)
    for (int j2 = 0; j2 < g.m2(); ++j2)
      for (int j1 = 0; j1 < g.m1(); ++j1) {
        double acc = 0.0;
        for (int iy = 0; iy < g.n_y; ++iy) acc += std::pow(s.eigenfunctions(g.unknown(iy, j1, j2), b), 2);
        out(cs.index(j1 + 1, j2 + 1), b) = g.h_y * acc;
      }
  return out;
}

BlochSpectrum compute_spectrum(const LatticePotential& w, const UnitCellGrid& grid, const BlochOptions& options) {
  BlochSpectrum s = solve_bloch(assemble_hamiltonian(w, grid), w, grid, options);
  std::tie(s.grad_elements, s.grad_antisymmetry_defect) = gradient_matrix_elements(s);
  std::tie(s.masses, s.mass_remainders) = effective_masses(s, options.degeneracy_tol, options.coupling_tol);
  s.g = confinement_densities(s);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> continuum_levels_below(double cut, double w1, double w2) {
  using std::numbers::pi;
  std::vector<double> out;
  const int mmax = static_cast<int>(std::sqrt(2.0 * cut) / (2.0 * pi)) + 1;
  const int pmax = static_cast<int>(std::sqrt(2.0 * cut) * w1 / pi) + 1;
  const int qmax = static_cast<int>(std::sqrt(2.0 * cut) * w2 / pi) + 1;
  for (int m = -mmax; m <= mmax; ++m)
    for (int p = 1; p <= pmax; ++p)
      for (int q = 1; q <= qmax; ++q) {
        const double l = 0.5 * (4.0 * pi * pi * m * m + pi * pi * p * p / (w1 * w1) + pi * pi * q * q / (w2 * w2));
        if (l <= cut) out.push_back(l);
      }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Vector continuum_free_levels(int count, double w1, double w2) {
  double cut = 20.0;
  std::vector<double> levels;
  while (static_cast<int>((levels = continuum_levels_below(cut, w1, w2)).size()) < count) cut *= 2.0;
  Vector out(count);
  for (int i = 0; i < count; ++i) out(i) = levels[static_cast<std::size_t>(i)];
  return out;
}

double band_truncation_bound(int n_bands, double w1, double w2, double sup, double lambda) {
  require(lambda > 0.0, "truncation bound needs lambda > 0");
  require(n_bands >= 0, "band count must be nonnegative");
  // the number of levels below L grows like L^{3/2}; cut where the tail is far below double precision
  double cut = 10.0;
  while (lambda * cut - 2.0 * std::log(cut + sup) - 1.5 * std::log(cut) - std::log(w1 * w2 + 1.0) < 60.0) cut *= 1.25;
  const std::vector<double> levels = continuum_levels_below(cut, w1, w2);
  double tail = 0.0;
  for (std::size_t i = levels.size(); i-- > static_cast<std::size_t>(n_bands);)
    tail += std::exp(-lambda * levels[i]) * std::pow(levels[i] + sup, 2);
  return tail;
}

}  // namespace nanowire

namespace nanowire {

Subbands subbands(const BlochSpectrum& s) {
  require(s.masses.size() == s.n_bands && s.g.cols() == s.n_bands, "spectrum lacks masses or densities");
  return {s.energies, s.masses, s.g};
}

Subbands free_subbands(const CrossSectionGrid& cs, int count) {
  using std::numbers::pi;
  require(count >= 1, "need at least one band");
  struct Mode {
    double e;
    int p, q;
  };
  std::vector<Mode> modes;
  const int reach = count + 2;
  for (int p = 1; p <= reach; ++p)
    for (int q = 1; q <= reach; ++q)
      modes.push_back({0.5 * pi * pi * (p * p / (cs.width1 * cs.width1) + q * q / (cs.width2 * cs.width2)), p, q});
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.e < b.e; });
  Subbands out{Vector(count), Vector::Ones(count), Matrix(cs.size(), count)};
  for (int b = 0; b < count; ++b) {
    const Mode& m = modes[static_cast<std::size_t>(b)];
    out.energies(b) = m.e;
    for (int i2 = 0; i2 < cs.n2; ++i2)
      for (int i1 = 0; i1 < cs.n1; ++i1)
        out.g(cs.index(i1, i2), b) = std::pow(std::sin(m.p * pi * cs.z1(i1) / cs.width1), 2) *
                                     std::pow(std::sin(m.q * pi * cs.z2(i2) / cs.width2), 2);
    out.g.col(b) /= cs.weights.dot(out.g.col(b));
  }
  return out;
}

}  // namespace nanowire
