#pragma once

#include "nanowire/poisson.hpp"
#include "nanowire/transport.hpp"

#include <optional>
#include <vector>

namespace nanowire {

/// The bounded device with its bands, boundary data and transport model.
struct DeviceModel {
  DeviceGrid grid;
  Subbands bands;
  double boundary_density = 1.0;  // N_b at both axial ends
  Vector boundary_potential;      // V_b(z) at both axial ends; zero when empty
  double epsilon = 0.0;           // regularization radius
  double tau = 1.0;               // constant relaxation time for D
  std::optional<double> diffusion_override;
  PoissonOptions poisson;
};

struct GummelOptions {
  double tol = 1e-10;
  int max_iterations = 200;
  double damping = 1.0;      // initial theta
  double min_damping = 1e-3;
};

struct GummelState {
  int iteration = 0;
  Vector Ns;
  Matrix V;
  std::vector<double> residuals;  // [||dN||_L2^2 + dt ||dN||_H1^2]^(1/2) per iteration
  double damping = 1.0;
  bool damping_active = false;
  bool converged = false;
};

struct EntropyValues {
  double W = 0.0;
  double entropy = 0.0;      // band part
  double field = 0.0;        // 1/2 |grad(V - Vbar)|^2
  double dissipation = 0.0;  // discrete D e^{-Vs} (du)^2 / u
};

struct EntropySample {
  double t = 0.0;
  double W = 0.0;
  double dissipation = 0.0;
  double mass = 0.0;
  int gummel_iterations = 0;
  double residual = 0.0;
};

struct EntropyReport {
  std::vector<EntropySample> samples;
  std::string extensions = "Nbar = N_b, Vbar(x, z) = V_b(z)";
  double beta = 0.0;         // max |d ln(ubar)/dx|
  double C0 = 0.0;           // (e - 1) int Nbar
  double growth = 0.0;       // beta^2 D2 / 2
  double mass_bound(double t) const;  // (W(0) + C0) exp(growth t)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> Ns;
  Matrix V;  // final potential
  EntropyReport report;
};

/// Gummel coupling of the regularized Poisson problem and drift-diffusion.
class SelfConsistentSolver {
 public:
  explicit SelfConsistentSolver(DeviceModel model, GummelOptions options = {});

  const DeviceModel& model() const { return model_; }
  const PoissonOperator& poisson() const { return op_; }

  /// Nonlinear Poisson solve for a given surface density, warm-started from `guess`.
  PoissonResult electrostatics(const Vector& Ns, const Matrix& guess = Matrix()) const;
  /// D(x) from the constant-rate formula at the given projected potential, or the override.
  Vector diffusion(const Matrix& Vnn) const;

  /// One application of the Gummel map with damping: Poisson from state.Ns,
  /// then one backward-Euler step from `previous` over dt (dt <= 0: steady solve).
  GummelState gummel_step(const GummelState& state, const Vector& previous, double dt) const;
  /// Iterates the map to tolerance; throws ConvergenceError with the history.
  GummelState solve_step(const Vector& previous, double dt, const Matrix& guess = Matrix()) const;
  GummelState solve_steady(const Vector& guess) const;

  /// Relative entropy against the extensions Nbar = N_b, Vbar = V_b(z), and
  /// the discrete dissipation rate.
  EntropyValues relative_entropy(const Vector& Ns, const Matrix& V) const;
  EntropyReport empty_report() const;

  /// Implicit time loop; with epsilon > 0 the initial data are capped at 1/epsilon.
  Trajectory run_transient(const Vector& N0, double dt, double final_time) const;

 private:
  Vector pin_ends(Vector Ns) const;
  double residual_norm(const Vector& dN, double dt) const;

  DeviceModel model_;
  GummelOptions opts_;
  PoissonOperator op_;
  Matrix Vbar_;
};

/// Thrown when Gummel stalls; carries the residual history.
class GummelError : public ConvergenceError {
 public:
  GummelError(const std::string& what, double attained, std::vector<double> history)
      : ConvergenceError(what, attained), residuals(std::move(history)) {}
  std::vector<double> residuals;
};

struct EpsilonRow {
  double epsilon = 0.0;
  double density_delta = 0.0;    // ||N^eps - N^0||_L2
  double potential_delta = 0.0;  // ||V^eps - V^0||_H1
};

/// Runs the same transient at every epsilon and compares with epsilon = 0.
std::vector<EpsilonRow> epsilon_stability_sweep(const DeviceModel& model, const GummelOptions& options,
                                                const Vector& N0, double dt, double final_time,
                                                const std::vector<double>& epsilons);

}  // namespace nanowire
