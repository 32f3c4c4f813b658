#pragma once

#include "nanowire/bloch.hpp"
#include "nanowire/kinetic.hpp"
#include "nanowire/selfconsistent.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nanowire {

/// Schema problem in a configuration file: unknown key, wrong type or value.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& field, int line, const std::string& detail);
  std::string field;
  int line = 0;  // 0 when unknown
};

struct BlochSection {
  int n_bands = 3;
  double eig_tol = 1e-8;
  double degeneracy_tol = 1e-6;
  double coupling_tol = 1e-6;
  /// "free" (W = 0), "constant" (W = base), "cosine" (W = base + amplitude cos(2 pi y))
  /// or "file" (whitespace-separated samples, y fastest, then z1, then z2).
  std::string potential = "free";
  double base = 0.0;
  double amplitude = 0.0;
  std::string file;          // resolved against the config directory
  double truncation_lambda = 1.0;
};

struct PhysicsSection {
  double tau = 1.0;
  double alpha1 = 0.5, alpha2 = 1.5;  // cross-section bounds of the tabulated kernel
  double boundary_density = 1.0;
  /// V_b(z) = vb_constant + vb_amplitude cos(pi z1 / w1) cos(pi z2 / w2)
  double vb_constant = 0.0;
  double vb_amplitude = 0.0;
  std::optional<double> diffusion;
  double epsilon = 0.0;
};

struct SolverSection {
  double gummel_tol = 1e-10;
  int gummel_max_iterations = 200;
  double damping = 1.0;
  double poisson_tol = 1e-10;
  int poisson_max_newton = 60;
  double dt = 0.005;
  double final_time = 0.1;
};

struct InitialSection {
  /// N_s(0) = N_b + height sin^2(pi x / L)
  double height = 1.0;
};

struct KineticSection {
  std::vector<double> etas{0.5, 0.25, 0.125, 0.0625};
  DiffusiveLimitConfig scenario;
  bool negative_control = true;
};

struct RegularizationSection {
  std::vector<double> epsilons;  // extra sweep in `run`, compared with epsilon = 0
};

struct ConvergenceSection {
  int levels = 3;
  int base_nodes = 9;  // cross-section nodes per direction on the coarsest level
  int n_y = 8;
};

struct OutputSection {
  std::string directory = "out";
  int cadence = 1;  // write every cadence-th time step to the field CSVs
};

struct RunConfig {
  GridConfig grid;
  BlochSection bloch;
  PhysicsSection physics;
  SolverSection solver;
  InitialSection initial;
  KineticSection kinetic;
  RegularizationSection regularization;
  ConvergenceSection convergence;
  OutputSection output;
  std::string source_dir = ".";

  /// 16-hex-digit FNV-1a digest of the canonical form below.
  std::string hash() const;
  /// Fully resolved settings as TOML-like `section.key = value` lines in fixed order.
  std::string canonical() const;
};

/// Parses and validates; physical bounds raise AssumptionViolation, schema
/// problems raise ConfigError with the field and line.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source_dir = ".");

/// Lattice potential on the unit-cell grid described by the config.
LatticePotential lattice_potential(const RunConfig& config, const UnitCellGrid& grid);
/// V_b(z) on the device cross-section.
Vector boundary_potential(const RunConfig& config, const CrossSectionGrid& cross);
DeviceModel device_model(const RunConfig& config, const DeviceGrid& grid, const Subbands& bands);
GummelOptions gummel_options(const RunConfig& config);
Vector initial_density(const RunConfig& config, const AxialGrid& axis);

}  // namespace nanowire
