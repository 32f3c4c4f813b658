#include "nanowire/config.hpp"

#include <toml.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace nanowire {

ConfigError::ConfigError(const std::string& f, int l, const std::string& detail)
    : InvalidArgument("config field '" + f + "'" + (l > 0 ? " (line " + std::to_string(l) + ")" : "") + ": " +
                      detail),
      field(f),
      line(l) {}

namespace {

int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

// Reads typed keys from one section and rejects anything it did not ask for.
class Section {
 public:
  Section(const toml::table& root, std::string name) : name_(std::move(name)) {
    if (const toml::node* n = root.get(name_)) {
      if (!n->is_table()) throw ConfigError(name_, line_of(*n), "must be a table");
      table_ = n->as_table();
    }
  }

  void get(const char* key, int& out) {
    if (const toml::node* n = find(key)) {
      const auto v = n->value_exact<std::int64_t>();
      if (!v) throw ConfigError(field(key), line_of(*n), "must be an integer");
      out = static_cast<int>(*v);
    }
  }
  void get(const char* key, double& out) {
    if (const toml::node* n = find(key)) {
      if (!n->is_number()) throw ConfigError(field(key), line_of(*n), "must be a number");
      out = *n->value<double>();
      if (!std::isfinite(out)) throw ConfigError(field(key), line_of(*n), "must be finite");
    }
  }
  void get(const char* key, std::optional<double>& out) {
    if (find(key)) {
      double v = 0.0;
      get(key, v);
      out = v;
    }
  }
  void get(const char* key, bool& out) {
    if (const toml::node* n = find(key)) {
      const auto v = n->value_exact<bool>();
      if (!v) throw ConfigError(field(key), line_of(*n), "must be true or false");
      out = *v;
    }
  }
  void get(const char* key, std::string& out) {
    if (const toml::node* n = find(key)) {
      const auto v = n->value_exact<std::string>();
      if (!v) throw ConfigError(field(key), line_of(*n), "must be a string");
      out = *v;
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const toml::node* n = find(key)) {
      const toml::array* a = n->as_array();
      if (!a) throw ConfigError(field(key), line_of(*n), "must be an array of numbers");
      out.clear();
      for (const auto& e : *a) {
        if (!e.is_number()) throw ConfigError(field(key), line_of(e), "must be an array of numbers");
        out.push_back(*e.value<double>());
      }
    }
  }
  void get(const char* key, Vector& out) {
    if (find(key)) {
      std::vector<double> v;
      get(key, v);
      out = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }

  int line(const char* key) const {
    const toml::node* n = table_ ? table_->get(key) : nullptr;
    return n ? line_of(*n) : 0;
  }
  std::string field(const char* key) const { return name_ + "." + key; }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!used_.count(std::string(k.str())))
        throw ConfigError(name_ + "." + std::string(k.str()), line_of(v), "unknown key");
  }

 private:
  const toml::node* find(const char* key) {
    used_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  std::string name_;
  const toml::table* table_ = nullptr;
  std::set<std::string> used_;
};

void positive(const Section& s, const char* key, double v) {
  if (!(v > 0.0)) throw ConfigError(s.field(key), s.line(key), "must be positive");
}
void at_least(const Section& s, const char* key, int v, int lo) {
  if (v < lo) throw ConfigError(s.field(key), s.line(key), "must be at least " + std::to_string(lo));
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}
std::string list(const Vector& v) { return list(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError("<syntax>", static_cast<int>(e.source().begin.line), std::string(e.description()));
  }
  static const std::set<std::string> sections{"grid", "bloch", "physics", "solver", "initial",
                                              "kinetic", "regularization", "convergence", "output"};
  for (const auto& [k, v] : root)
    if (!sections.count(std::string(k.str()))) throw ConfigError(std::string(k.str()), line_of(v), "unknown section");

  RunConfig c;
  c.source_dir = source_dir;

  Section g(root, "grid");
  g.get("n_y", c.grid.n_y);
  g.get("n_z1", c.grid.n_z1);
  g.get("n_z2", c.grid.n_z2);
  g.get("width_z1", c.grid.width_z1);
  g.get("width_z2", c.grid.width_z2);
  g.get("n_x", c.grid.n_x);
  g.get("length", c.grid.length);
  g.get("n_p", c.grid.n_p);
  g.get("p_max", c.grid.p_max);
  g.finish();
  at_least(g, "n_y", c.grid.n_y, 4);
  at_least(g, "n_z1", c.grid.n_z1, 4);
  at_least(g, "n_z2", c.grid.n_z2, 4);
  at_least(g, "n_x", c.grid.n_x, 3);
  at_least(g, "n_p", c.grid.n_p, 3);
  positive(g, "width_z1", c.grid.width_z1);
  positive(g, "width_z2", c.grid.width_z2);
  positive(g, "length", c.grid.length);
  positive(g, "p_max", c.grid.p_max);

  Section b(root, "bloch");
  b.get("n_bands", c.bloch.n_bands);
  b.get("eig_tol", c.bloch.eig_tol);
  b.get("degeneracy_tol", c.bloch.degeneracy_tol);
  b.get("coupling_tol", c.bloch.coupling_tol);
  b.get("potential", c.bloch.potential);
  b.get("base", c.bloch.base);
  b.get("amplitude", c.bloch.amplitude);
  b.get("file", c.bloch.file);
  b.get("truncation_lambda", c.bloch.truncation_lambda);
  b.finish();
  at_least(b, "n_bands", c.bloch.n_bands, 1);
  positive(b, "eig_tol", c.bloch.eig_tol);
  positive(b, "truncation_lambda", c.bloch.truncation_lambda);
  {
    const auto& p = c.bloch.potential;
    if (p != "free" && p != "constant" && p != "cosine" && p != "file")
      throw ConfigError(b.field("potential"), b.line("potential"), "must be one of free, constant, cosine, file");
    if (p == "file" && c.bloch.file.empty())
      throw ConfigError(b.field("file"), b.line("potential"), "is required when potential = \"file\"");
    // the sampled minimum of base + amplitude cos(2 pi y) is base - |amplitude|
    const double wmin = p == "constant" ? c.bloch.base
                        : p == "cosine" ? c.bloch.base - std::abs(c.bloch.amplitude)
                                        : 0.0;
    if (wmin < 0.0)
      throw AssumptionViolation("Assumption 1.1 (nonnegative bounded lattice potential)",
                                "bloch potential reaches W_L = " + num(wmin) + " (line " +
                                    std::to_string(b.line("base")) + ")");
  }

  Section ph(root, "physics");
  ph.get("tau", c.physics.tau);
  ph.get("alpha1", c.physics.alpha1);
  ph.get("alpha2", c.physics.alpha2);
  ph.get("boundary_density", c.physics.boundary_density);
  ph.get("vb_constant", c.physics.vb_constant);
  ph.get("vb_amplitude", c.physics.vb_amplitude);
  ph.get("diffusion", c.physics.diffusion);
  ph.get("epsilon", c.physics.epsilon);
  ph.finish();
  if (!(c.physics.alpha1 > 0.0) || c.physics.alpha1 > c.physics.alpha2)
    throw AssumptionViolation("Assumption 2.2 (symmetric cross-section bounded above and below)",
                              "need 0 < alpha1 <= alpha2, got alpha1 = " + num(c.physics.alpha1) +
                                  ", alpha2 = " + num(c.physics.alpha2) + " (line " +
                                  std::to_string(ph.line("alpha1")) + ")");
  if (!(c.physics.tau > 0.0))
    throw AssumptionViolation("Assumption 3.1 (diffusion bounded above and below)",
                              "relaxation time tau must be positive (line " + std::to_string(ph.line("tau")) + ")");
  if (c.physics.diffusion && !(*c.physics.diffusion > 0.0))
    throw AssumptionViolation("Assumption 3.1 (diffusion bounded above and below)",
                              "diffusion override must be positive (line " + std::to_string(ph.line("diffusion")) +
                                  ")");
  if (!(c.physics.boundary_density > 0.0))
    throw AssumptionViolation("Assumption 3.3 (positive constant boundary density)",
                              "boundary_density must be positive (line " +
                                  std::to_string(ph.line("boundary_density")) + ")");
  if (c.physics.epsilon < 0.0) throw ConfigError(ph.field("epsilon"), ph.line("epsilon"), "must be nonnegative");

  Section s(root, "solver");
  s.get("gummel_tol", c.solver.gummel_tol);
  s.get("gummel_max_iterations", c.solver.gummel_max_iterations);
  s.get("damping", c.solver.damping);
  s.get("poisson_tol", c.solver.poisson_tol);
  s.get("poisson_max_newton", c.solver.poisson_max_newton);
  s.get("dt", c.solver.dt);
  s.get("final_time", c.solver.final_time);
  s.finish();
  positive(s, "gummel_tol", c.solver.gummel_tol);
  at_least(s, "gummel_max_iterations", c.solver.gummel_max_iterations, 1);
  if (!(c.solver.damping > 0.0 && c.solver.damping <= 1.0))
    throw ConfigError(s.field("damping"), s.line("damping"), "must lie in (0, 1]");
  positive(s, "poisson_tol", c.solver.poisson_tol);
  at_least(s, "poisson_max_newton", c.solver.poisson_max_newton, 1);
  positive(s, "dt", c.solver.dt);
  positive(s, "final_time", c.solver.final_time);

  Section in(root, "initial");
  in.get("height", c.initial.height);
  in.finish();
  if (c.initial.height < -c.physics.boundary_density)
    throw AssumptionViolation("Assumption 3.2 (nonnegative initial density)",
                              "initial.height below -boundary_density makes N_s(0) negative (line " +
                                  std::to_string(in.line("height")) + ")");

  Section k(root, "kinetic");
  auto& sc = c.kinetic.scenario;
  k.get("eta", c.kinetic.etas);
  k.get("energies", sc.energies);
  k.get("masses", sc.masses);
  k.get("amplitudes", sc.amplitudes);
  k.get("half_width", sc.half_width);
  k.get("cells", sc.cells);
  k.get("n_p", sc.n_p);
  k.get("p_max_factor", sc.p_max_factor);
  k.get("final_time", sc.final_time);
  k.get("cfl", sc.cfl);
  k.get("tabulated", sc.tabulated);
  k.get("kernel_width", sc.kernel_width);
  k.get("dd_steps", sc.dd_steps);
  k.get("negative_control", c.kinetic.negative_control);
  k.finish();
  sc.tau = c.physics.tau;
  sc.alpha1 = c.physics.alpha1;
  sc.alpha2 = c.physics.alpha2;
  if (c.kinetic.etas.empty()) throw ConfigError(k.field("eta"), k.line("eta"), "must not be empty");
  for (std::size_t i = 0; i < c.kinetic.etas.size(); ++i)
    if (!(c.kinetic.etas[i] > 0.0) || (i > 0 && c.kinetic.etas[i] >= c.kinetic.etas[i - 1]))
      throw ConfigError(k.field("eta"), k.line("eta"), "must be positive and strictly decreasing");
  if (sc.masses.size() != sc.energies.size() || sc.amplitudes.size() != sc.energies.size() || sc.energies.size() == 0)
    throw ConfigError(k.field("energies"), k.line("energies"), "energies, masses and amplitudes need equal nonzero length");
  if ((sc.amplitudes.array() < 0.0).any())
    throw AssumptionViolation("Assumption 1.1 (nonnegative bounded lattice potential)",
                              "kinetic.amplitudes must be nonnegative (line " + std::to_string(k.line("amplitudes")) +
                                  ")");
  if ((sc.masses.array() <= 0.0).any())
    throw AssumptionViolation("Assumption 3.1 (diffusion bounded above and below)",
                              "kinetic.masses must be positive (line " + std::to_string(k.line("masses")) + ")");
  at_least(k, "cells", sc.cells, 4);
  at_least(k, "n_p", sc.n_p, 3);
  at_least(k, "dd_steps", sc.dd_steps, 1);
  positive(k, "half_width", sc.half_width);
  positive(k, "p_max_factor", sc.p_max_factor);
  positive(k, "final_time", sc.final_time);
  positive(k, "kernel_width", sc.kernel_width);
  if (!(sc.cfl > 0.0 && sc.cfl <= 1.0)) throw ConfigError(k.field("cfl"), k.line("cfl"), "must lie in (0, 1]");

  Section r(root, "regularization");
  r.get("epsilons", c.regularization.epsilons);
  r.finish();
  for (double e : c.regularization.epsilons)
    if (e < 0.0) throw ConfigError(r.field("epsilons"), r.line("epsilons"), "must be nonnegative");

  Section cv(root, "convergence");
  cv.get("levels", c.convergence.levels);
  cv.get("base_nodes", c.convergence.base_nodes);
  cv.get("n_y", c.convergence.n_y);
  cv.finish();
  at_least(cv, "levels", c.convergence.levels, 2);
  at_least(cv, "base_nodes", c.convergence.base_nodes, 4);
  at_least(cv, "n_y", c.convergence.n_y, 4);

  Section o(root, "output");
  o.get("directory", c.output.directory);
  o.get("cadence", c.output.cadence);
  o.finish();
  at_least(o, "cadence", c.output.cadence, 1);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", 0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

std::string RunConfig::canonical() const {
  std::ostringstream o;
  o << "grid.n_y = " << grid.n_y << "\ngrid.n_z1 = " << grid.n_z1 << "\ngrid.n_z2 = " << grid.n_z2
    << "\ngrid.width_z1 = " << num(grid.width_z1) << "\ngrid.width_z2 = " << num(grid.width_z2)
    << "\ngrid.n_x = " << grid.n_x << "\ngrid.length = " << num(grid.length) << "\ngrid.n_p = " << grid.n_p
    << "\ngrid.p_max = " << num(grid.p_max) << '\n';
  o << "bloch.n_bands = " << bloch.n_bands << "\nbloch.eig_tol = " << num(bloch.eig_tol)
    << "\nbloch.degeneracy_tol = " << num(bloch.degeneracy_tol) << "\nbloch.coupling_tol = " << num(bloch.coupling_tol)
    << "\nbloch.potential = \"" << bloch.potential << "\"\nbloch.base = " << num(bloch.base)
    << "\nbloch.amplitude = " << num(bloch.amplitude) << "\nbloch.file = \"" << bloch.file
    << "\"\nbloch.truncation_lambda = " << num(bloch.truncation_lambda) << '\n';
  o << "physics.tau = " << num(physics.tau) << "\nphysics.alpha1 = " << num(physics.alpha1)
    << "\nphysics.alpha2 = " << num(physics.alpha2) << "\nphysics.boundary_density = " << num(physics.boundary_density)
    << "\nphysics.vb_constant = " << num(physics.vb_constant) << "\nphysics.vb_amplitude = " << num(physics.vb_amplitude)
    << "\nphysics.diffusion = " << (physics.diffusion ? num(*physics.diffusion) : "none")
    << "\nphysics.epsilon = " << num(physics.epsilon) << '\n';
  o << "solver.gummel_tol = " << num(solver.gummel_tol) << "\nsolver.gummel_max_iterations = "
    << solver.gummel_max_iterations << "\nsolver.damping = " << num(solver.damping)
    << "\nsolver.poisson_tol = " << num(solver.poisson_tol) << "\nsolver.poisson_max_newton = "
    << solver.poisson_max_newton << "\nsolver.dt = " << num(solver.dt) << "\nsolver.final_time = "
    << num(solver.final_time) << '\n';
  o << "initial.height = " << num(initial.height) << '\n';
  const auto& sc = kinetic.scenario;
  o << "kinetic.eta = " << list(kinetic.etas) << "\nkinetic.energies = " << list(sc.energies)
    << "\nkinetic.masses = " << list(sc.masses) << "\nkinetic.amplitudes = " << list(sc.amplitudes)
    << "\nkinetic.half_width = " << num(sc.half_width) << "\nkinetic.cells = " << sc.cells
    << "\nkinetic.n_p = " << sc.n_p << "\nkinetic.p_max_factor = " << num(sc.p_max_factor)
    << "\nkinetic.final_time = " << num(sc.final_time) << "\nkinetic.cfl = " << num(sc.cfl)
    << "\nkinetic.tabulated = " << (sc.tabulated ? "true" : "false") << "\nkinetic.kernel_width = "
    << num(sc.kernel_width) << "\nkinetic.dd_steps = " << sc.dd_steps
    << "\nkinetic.negative_control = " << (kinetic.negative_control ? "true" : "false") << '\n';
  o << "regularization.epsilons = " << list(regularization.epsilons) << '\n';
  o << "convergence.levels = " << convergence.levels << "\nconvergence.base_nodes = " << convergence.base_nodes
    << "\nconvergence.n_y = " << convergence.n_y << '\n';
  // the output directory and cadence do not change any number, so they stay out of the digest
  return o.str();
}

std::string RunConfig::hash() const {
  const std::string c = canonical();
  return fnv1a_hex(c.data(), c.size());
}

LatticePotential lattice_potential(const RunConfig& c, const UnitCellGrid& grid) {
  const auto& b = c.bloch;
  if (b.potential == "free") return LatticePotential::constant(grid, 0.0);
  if (b.potential == "constant") return LatticePotential::constant(grid, b.base);
  if (b.potential == "cosine")
    return LatticePotential::from_function(
        grid, [&](double y, double, double) { return b.base + b.amplitude * std::cos(2.0 * std::numbers::pi * y); });
  const auto path = std::filesystem::path(b.file).is_absolute() ? std::filesystem::path(b.file)
                                                                  : std::filesystem::path(c.source_dir) / b.file;
  std::ifstream in(path);
  if (!in) throw ConfigError("bloch.file", 0, "cannot open " + path.string());
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw ConfigError("bloch.file", 0, "non-numeric entry in " + path.string());
  const auto expected = static_cast<std::size_t>(grid.n_y) * grid.cross.size();
  if (v.size() != expected)
    throw ConfigError("bloch.file", 0,
                      "expected " + std::to_string(expected) + " samples, found " + std::to_string(v.size()));
  return LatticePotential(grid, Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

Vector boundary_potential(const RunConfig& c, const CrossSectionGrid& cross) {
  Vector Vb(cross.size());
  for (int i2 = 0; i2 < cross.n2; ++i2)
    for (int i1 = 0; i1 < cross.n1; ++i1)
      Vb(cross.index(i1, i2)) =
          c.physics.vb_constant + c.physics.vb_amplitude * std::cos(std::numbers::pi * cross.z1(i1) / cross.width1) *
                                      std::cos(std::numbers::pi * cross.z2(i2) / cross.width2);
  return Vb;
}

DeviceModel device_model(const RunConfig& c, const DeviceGrid& grid, const Subbands& bands) {
  DeviceModel m;
  m.grid = grid;
  m.bands = bands;
  m.boundary_density = c.physics.boundary_density;
  m.boundary_potential = boundary_potential(c, grid.cross);
  m.epsilon = c.physics.epsilon;
  m.tau = c.physics.tau;
  m.diffusion_override = c.physics.diffusion;
  m.poisson.tol = c.solver.poisson_tol;
  m.poisson.max_newton = c.solver.poisson_max_newton;
  return m;
}

GummelOptions gummel_options(const RunConfig& c) {
  GummelOptions o;
  o.tol = c.solver.gummel_tol;
  o.max_iterations = c.solver.gummel_max_iterations;
  o.damping = c.solver.damping;
  return o;
}

Vector initial_density(const RunConfig& c, const AxialGrid& axis) {
  Vector N(axis.n);
  for (int i = 0; i < axis.n; ++i) {
    const double s = std::sin(std::numbers::pi * (axis.x(i) - axis.origin) / axis.length);
    N(i) = c.physics.boundary_density + c.initial.height * s * s;
  }
  return N;
}

}  // namespace nanowire
