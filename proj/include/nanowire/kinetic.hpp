#pragma once

#include "nanowire/grids.hpp"

#include <Eigen/LU>

#include <vector>

namespace nanowire {

// Phase-space fields are matrices with one column per axial node and one row
// per (band, momentum) pair, row index band * n_p + j.

/// Normalized band Maxwellians on a momentum grid, one column per axial node.
struct MaxwellianTable {
  MomentumGrid grid;
  int n_bands = 0;
  Vector masses;
  Matrix normalized;  // script-M, with sum_k w_k M_k = 1 on every column
  Matrix plain;       // Z * script-M
  Vector log_Z;       // ln Z(x)
  Vector Vs;          // -ln Z(x)
  Vector velocity;    // p_j / m_b per row
  Vector weights;     // momentum quadrature weight per row
  /// max over x of the Maxwellian mass beyond +-p_max, sum_n w_n erfc(p_max / sqrt(2 m_n)).
  double truncation_defect = 0.0;

  int rows() const { return n_bands * grid.n; }
  int n_x() const { return static_cast<int>(normalized.cols()); }
  int row(int band, int j) const { return band * grid.n + j; }
};

/// Samples script-M_n(x, p) for bands with the given energies and masses and
/// projected potential Vnn (n_bands x n_x). Exponents are shifted by their
/// minimum per x, and each band is rescaled so its discrete mass is exactly
/// its Boltzmann weight. Throws when the truncation defect exceeds `max_defect`.
MaxwellianTable build_maxwellians(const Vector& energies, const Vector& masses, const Matrix& Vnn,
                                  const MomentumGrid& grid, double max_defect = 1e-6);

/// Symmetric cross-section alpha over the (band, momentum) rows, either the
/// constant 1/tau or a dense table.
class CrossSection {
 public:
  static CrossSection constant(double tau);
  /// Validates symmetry and alpha1 <= alpha <= alpha2 with alpha1 > 0.
  static CrossSection table(Matrix alpha, double alpha1, double alpha2);
  /// Table alpha(n, p, n', p') = a1 + (a2 - a1) exp(-(p - p')^2 / (2 width^2)) / (1 + |n - n'|).
  static CrossSection gaussian(int n_bands, const MomentumGrid& grid, double alpha1, double alpha2, double width);

  bool is_constant() const { return table_.size() == 0; }
  double rate() const { return rate_; }  // 1/tau for the constant kind
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// Dense table of size rows x rows.
  Matrix dense(int rows) const;

 private:
  double rate_ = 0.0, lower_ = 0.0, upper_ = 0.0;
  Matrix table_;
};

/// Dense matrix of Q_B at one axial node: gain M_k alpha_kk' w_k' minus the
/// diagonal loss sum_k' alpha_kk' w_k' M_k'.
Matrix collision_matrix(const Vector& M, const Vector& weights, const CrossSection& alpha);

/// Q_B(f) at every axial node. Gain and loss share the same quadrature, so
/// sum_k w_k Q_B(f)_k vanishes up to rounding.
Matrix collision_apply(const Matrix& f, const MaxwellianTable& table, const CrossSection& alpha);

/// Orthogonal projection onto ker Q_B in the M-weighted product: N_s(f) M.
Matrix kernel_projection(const Matrix& f, const MaxwellianTable& table);

/// sum_k w_k f_k g_k / M_k summed over axial nodes with weights `axial_weights`
/// (a single column when that vector is empty).
double weighted_inner(const Matrix& f, const Matrix& g, const MaxwellianTable& table,
                      const Vector& axial_weights = Vector());

struct ThetaField {
  Matrix Theta;  // rows x n_x
  Vector D;      // diffusion coefficient per axial node
  double residual = 0.0;  // max relative residual of Q_B(Theta) = -v M
};

/// Solves Q_B(Theta) = -v M with sum_k w_k Theta_k = 0 at each axial node by a
/// bordered dense LU (multiplier on the M column); D = sum_k w_k v_k Theta_k.
ThetaField solve_theta(const MaxwellianTable& table, const CrossSection& alpha);

struct Moments {
  Vector Ns;  // sum_k w_k f_k
  Vector J;   // (1/eta) sum_k w_k v_k f_k
};

Moments moments(const Matrix& f, const MaxwellianTable& table, double eta);

enum class AxialBoundary { ZeroInflow, Periodic };

struct KineticOptions {
  double eta = 0.1;
  bool transport = true;
  bool collisions = true;
  AxialBoundary boundary = AxialBoundary::ZeroInflow;
};

/// IMEX stepper for
///   df/dt + (1/eta)(v df/dx - dVnn/dx df/dp) = Q_B(f) / eta^2
/// with a given static potential. The axial nodes are treated as centres of
/// cells of width h. Transport is explicit: limited MUSCL (van Leer) in x and
/// first-order upwind in p with no flux through +-p_max. Collisions are
/// implicit: closed form for constant alpha, per-node dense LU otherwise.
class KineticSolver {
 public:
  KineticSolver(MaxwellianTable table, const Matrix& Vnn, const AxialGrid& axis, CrossSection alpha,
                KineticOptions options);

  /// Largest dt for which the explicit transport stage keeps f >= 0.
  double max_stable_dt() const;
  /// One step; throws on CFL violation or any negative value.
  Matrix step(const Matrix& f, double dt);
  /// Explicit transport operator L with df/dt = -L f (no collisions).
  Matrix transport_rate(const Matrix& f) const;
  /// sum over x and k of h w_k f_k.
  double mass(const Matrix& f) const;

  const MaxwellianTable& table() const { return table_; }
  const AxialGrid& axis() const { return axis_; }
  const KineticOptions& options() const { return opts_; }

 private:
  Matrix collide(const Matrix& f, double dt);

  MaxwellianTable table_;
  AxialGrid axis_;
  CrossSection alpha_;
  KineticOptions opts_;
  Matrix p_speed_;  // n_bands x n_x: -dVnn/dx / eta
  double cached_dt_ = -1.0;
  std::vector<Eigen::PartialPivLU<Matrix>> lu_;
};

/// Single step with a freshly built solver.
Matrix advance_boltzmann(const Matrix& f, const MaxwellianTable& table, const Matrix& Vnn, const AxialGrid& axis,
                         const CrossSection& alpha, const KineticOptions& options, double dt);

// ---------------------------------------------------------------------------
// Diffusive-limit experiment

struct DiffusiveLimitConfig {
  Vector energies = (Vector(2) << 0.0, 0.5).finished();
  Vector masses = (Vector(2) << 1.0, 2.0).finished();
  Vector amplitudes = (Vector(2) << 0.5, 1.0).finished();  // Vnn = a_n sech^2(x)
  double half_width = 4.0;
  int cells = 200;
  int n_p = 64;
  double p_max_factor = 8.0;  // p_max = factor * sqrt(max m)
  double final_time = 0.1;
  double cfl = 0.45;
  double tau = 1.0;
  bool tabulated = false;  // Gaussian kernel between alpha1 and alpha2 instead of 1/tau
  double alpha1 = 0.5, alpha2 = 1.5, kernel_width = 2.0;
  int dd_steps = 2000;  // backward-Euler steps of the coarser reference run
};

struct DiffusiveLimitRow {
  double eta = 0.0;
  double error = 0.0;
  double order = 0.0;    // log(e_prev / e) / log(eta_prev / eta), NaN on the first row
  double leakage = 0.0;  // relative mass lost through the axial ends
  int steps = 0;
};

struct DiffusiveLimitResult {
  std::vector<DiffusiveLimitRow> rows;
  double fitted_slope = 0.0;  // least-squares slope of log e against log eta
  /// ||f - P f|| / ||eta f_1|| in L2_M at the smallest eta.
  double hilbert_ratio = 0.0;
  /// e(eta) of the collisionless run at the first eta; NaN when not requested.
  double free_error = 0.0;
  Vector x;
  Vector reference;  // drift-diffusion N_s(T)
  Matrix densities;  // kinetic N_s(T), one column per eta
};

/// Runs the kinetic solver for every eta (decreasing) and compares its density
/// at the final time with the drift-diffusion density built from D of
/// solve_theta. `negative_control` adds the collisionless run.
DiffusiveLimitResult diffusive_limit_experiment(const DiffusiveLimitConfig& config, const std::vector<double>& etas,
                                                bool negative_control = false);

}  // namespace nanowire
