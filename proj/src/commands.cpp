#include "nanowire/commands.hpp"
#include "nanowire/output.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

namespace nanowire {

namespace {

using json = nlohmann::ordered_json;
using std::numbers::pi;

std::string grid_descriptor(const GridConfig& g) {
  std::ostringstream os;
  os << "n_y=" << g.n_y << " n_z=" << g.n_z1 << "x" << g.n_z2 << " width=" << format_number(g.width_z1) << "x"
     << format_number(g.width_z2) << " n_x=" << g.n_x << " L=" << format_number(g.length) << " n_p=" << g.n_p
     << " p_max=" << format_number(g.p_max);
  return os.str();
}

// The grid an artifact was computed on, which differs per verb.
std::string grid_descriptor(const RunConfig& c, const std::string& verb) {
  std::ostringstream os;
  if (verb == "kinetic-sweep") {
    const auto& k = c.kinetic.scenario;
    os << "x=[-" << format_number(k.half_width) << "," << format_number(k.half_width) << "] cells=" << k.cells
       << " n_p=" << k.n_p << " p_max=" << format_number(k.p_max_factor) << "*sqrt(max m)";
  } else if (verb == "convergence") {
    os << "levels=" << c.convergence.levels << " base_nodes=" << c.convergence.base_nodes
       << " n_y=" << c.convergence.n_y << " (doubled per level)";
  } else {
    os << grid_descriptor(c.grid);
  }
  return os.str();
}

// Collects artifact paths and shares the provenance between writers.
struct Session {
  const RunConfig& config;
  const CommandContext& ctx;
  Provenance prov;
  json artifacts = json::array();

  Session(const RunConfig& c, const CommandContext& x, const std::string& verb, const std::string& grid)
      : config(c), ctx(x), prov{c.hash(), grid, verb, x.seed} {
    std::filesystem::create_directories(ctx.out_dir);
  }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& columns) {
    artifacts.push_back((ctx.out_dir / name).string());
    return CsvWriter(ctx.out_dir / name, prov, columns);
  }
  void summary(const std::string& name, json body) {
    artifacts.push_back((ctx.out_dir / name).string());
    write_json(ctx.out_dir / name, prov, std::move(body));
  }
  void log(const std::string& msg) const {
    if (ctx.verbose) std::cerr << "[" << prov.verb << "] " << msg << '\n';
  }
};

BlochOptions bloch_options(const RunConfig& c, std::uint64_t seed) {
  BlochOptions o;
  o.n_bands = c.bloch.n_bands;
  o.eig_tol = c.bloch.eig_tol;
  o.degeneracy_tol = c.bloch.degeneracy_tol;
  o.coupling_tol = c.bloch.coupling_tol;
  o.lanczos.seed = seed;
  return o;
}

json matrix_rows(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

// Device bands from the configured lattice potential.
Subbands device_bands(const RunConfig& c, const UnitCellGrid& cell, std::uint64_t seed) {
  return subbands(compute_spectrum(lattice_potential(c, cell), cell, bloch_options(c, seed)));
}

void write_field(Session& s, const std::string& name, const DeviceGrid& g, const Matrix& V) {
  auto out = s.csv(name, {"x", "z1", "z2", "V"});
  for (int i = 0; i < g.n_x(); ++i)
    for (int i2 = 0; i2 < g.cross.n2; ++i2)
      for (int i1 = 0; i1 < g.cross.n1; ++i1)
        out.row({g.axis.x(i), g.cross.z1(i1), g.cross.z2(i2), V(g.cross.index(i1, i2), i)});
}

json cmd_bloch(Session& s) {
  const auto [cell, device, pgrid] = build_grids(s.config.grid);
  const LatticePotential w = lattice_potential(s.config, cell);
  s.log("solving " + std::to_string(cell.unknowns()) + " unknowns");
  const BlochSpectrum sp = compute_spectrum(w, cell, bloch_options(s.config, s.ctx.seed));
  const auto& cs = cell.cross;

  json body;
  body["n_bands"] = sp.n_bands;
  body["energies"] = to_json(sp.energies);
  body["free_energies"] = to_json(sp.free_energies);
  body["masses"] = to_json(sp.masses);
  body["mass_remainders"] = to_json(sp.mass_remainders);
  body["residuals"] = to_json(sp.residuals);
  body["grad_elements"] = matrix_rows(sp.grad_elements);
  body["grad_antisymmetry_defect"] = sp.grad_antisymmetry_defect;
  Vector norms(sp.n_bands);
  for (int n = 0; n < sp.n_bands; ++n) norms(n) = cs.weights.dot(sp.g.col(n));
  body["g_integrals"] = to_json(norms);
  body["potential"] = s.config.bloch.potential;
  body["potential_hash"] = sp.potential_hash;
  body["potential_sup"] = sp.potential_sup;
  body["truncation_lambda"] = s.config.bloch.truncation_lambda;
  body["truncation_bound"] = band_truncation_bound(sp, s.config.bloch.truncation_lambda);
  if (s.config.bloch.potential == "free") {
    const Vector exact = continuum_free_levels(sp.n_bands, cs.width1, cs.width2);
    body["analytic_energies"] = to_json(exact);
    body["relative_errors"] = to_json(Vector((sp.energies - exact).cwiseQuotient(exact).cwiseAbs()));
  }
  s.summary("bloch_spectrum.json", std::move(body));

  std::vector<std::string> cols{"z1", "z2"};
  for (int n = 1; n <= sp.n_bands; ++n) cols.push_back("g_" + std::to_string(n));
  auto g = s.csv("bloch_g.csv", cols);
  for (int i2 = 0; i2 < cs.n2; ++i2)
    for (int i1 = 0; i1 < cs.n1; ++i1) {
      std::vector<double> r{cs.z1(i1), cs.z2(i2)};
      for (int n = 0; n < sp.n_bands; ++n) r.push_back(sp.g(cs.index(i1, i2), n));
      g.row(r);
    }
  return {{"lowest_energy", sp.energies(0)}};
}

json cmd_poisson(Session& s) {
  const auto [cell, device, pgrid] = build_grids(s.config.grid);
  const Subbands bands = device_bands(s.config, cell, s.ctx.seed);
  const DeviceModel model = device_model(s.config, device, bands);
  const SelfConsistentSolver solver(model, gummel_options(s.config));
  const Vector Ns = initial_density(s.config, device.axis);
  const PoissonResult pr = solver.electrostatics(Ns);
  s.log("Newton iterations: " + std::to_string(pr.newton_iterations));

  write_field(s, "poisson_potential.csv", device, pr.V);
  const Vector D = solver.diffusion(pr.eq.Vnn);
  auto ax = s.csv("poisson_axial.csv", {"x", "N_s", "V_s", "D"});
  for (int i = 0; i < device.n_x(); ++i) ax.row({device.axis.x(i), Ns(i), pr.eq.partition.Vs(i), D(i)});

  json body;
  body["epsilon"] = model.epsilon;
  body["newton_iterations"] = pr.newton_iterations;
  body["cg_iterations"] = pr.cg_iterations;
  body["functional"] = to_json(pr.J);
  body["gradient_norm"] = to_json(pr.gradient_norm);
  body["band_energies"] = to_json(bands.energies);
  body["band_masses"] = to_json(bands.masses);
  s.summary("poisson_summary.json", std::move(body));
  return {{"newton_iterations", pr.newton_iterations}, {"final_gradient_norm", pr.gradient_norm.back()}};
}

json cmd_dd(Session& s) {
  const auto [cell, device, pgrid] = build_grids(s.config.grid);
  const Subbands bands = device_bands(s.config, cell, s.ctx.seed);
  const DeviceModel model = device_model(s.config, device, bands);
  const SelfConsistentSolver solver(model, gummel_options(s.config));
  Vector N = initial_density(s.config, device.axis);
  // the potential is frozen at the one generated by the initial density
  const PoissonResult pr = solver.electrostatics(N);
  const Vector& Vs = pr.eq.partition.Vs;
  const Vector D = solver.diffusion(pr.eq.Vnn);
  const auto& axis = device.axis;
  const DirichletData bc{model.boundary_density, model.boundary_density};

  auto dens = s.csv("dd_density.csv", {"t", "x", "N_s"});
  auto cur = s.csv("dd_current.csv", {"t", "x", "J"});
  auto emit = [&](double t) {
    for (int i = 0; i < axis.n; ++i) dens.row({t, axis.x(i), N(i)});
    const Vector J = current(N, Vs, D, axis);
    for (int i = 0; i + 1 < axis.n; ++i) cur.row({t, axis.x(i) + 0.5 * axis.h, J(i)});
  };
  const int steps = static_cast<int>(std::ceil(s.config.solver.final_time / s.config.solver.dt - 1e-12));
  const double dt = s.config.solver.final_time / steps;
  emit(0.0);
  double min_value = N.minCoeff();
  for (int k = 1; k <= steps; ++k) {
    N = advance_density(N, Vs, D, dt, axis, bc);
    min_value = std::min(min_value, N.minCoeff());
    if (k % s.config.output.cadence == 0 || k == steps) emit(k * dt);
  }
  const Vector Jend = current(N, Vs, D, axis);
  json body;
  body["steps"] = steps;
  body["dt"] = dt;
  body["final_mass"] = axis.weights.dot(N);
  body["min_density"] = min_value;
  body["final_current_spread"] = Jend.maxCoeff() - Jend.minCoeff();
  s.summary("dd_summary.json", std::move(body));
  return {{"steps", steps}, {"min_density", min_value}};
}

json cmd_kinetic_sweep(Session& s) {
  const auto& k = s.config.kinetic;
  s.log("running " + std::to_string(k.etas.size()) + " kinetic solves");
  const DiffusiveLimitResult r = diffusive_limit_experiment(k.scenario, k.etas, k.negative_control);
  auto table = s.csv("kinetic_sweep.csv", {"eta", "error", "order", "leakage", "steps"});
  for (const auto& row : r.rows) table.row({row.eta, row.error, row.order, row.leakage, double(row.steps)});

  std::vector<std::string> cols{"x", "N_dd"};
  for (std::size_t j = 0; j < k.etas.size(); ++j) cols.push_back("N_eta" + std::to_string(j + 1));
  auto prof = s.csv("kinetic_profiles.csv", cols);
  for (Eigen::Index i = 0; i < r.x.size(); ++i) {
    std::vector<double> row{r.x(i), r.reference(i)};
    for (Eigen::Index j = 0; j < r.densities.cols(); ++j) row.push_back(r.densities(i, j));
    prof.row(row);
  }

  bool monotone = true;
  for (std::size_t j = 1; j < r.rows.size(); ++j) monotone = monotone && r.rows[j].error < r.rows[j - 1].error;
  json body;
  body["etas"] = to_json(k.etas);
  body["errors"] = json::array();
  for (const auto& row : r.rows) body["errors"].push_back(row.error);
  body["strictly_decreasing"] = monotone;
  body["fitted_slope"] = r.fitted_slope;
  body["hilbert_ratio"] = r.hilbert_ratio;
  body["free_streaming_error"] = r.free_error;
  s.summary("kinetic_summary.json", std::move(body));
  return {{"fitted_slope", r.fitted_slope}, {"strictly_decreasing", monotone}};
}

json cmd_run(Session& s) {
  const auto [cell, device, pgrid] = build_grids(s.config.grid);
  const Subbands bands = device_bands(s.config, cell, s.ctx.seed);
  const DeviceModel model = device_model(s.config, device, bands);
  const GummelOptions gopt = gummel_options(s.config);
  const SelfConsistentSolver solver(model, gopt);
  const Vector N0 = initial_density(s.config, device.axis);
  const Trajectory tr = solver.run_transient(N0, s.config.solver.dt, s.config.solver.final_time);
  const auto& rep = tr.report;

  auto ent = s.csv("entropy.csv", {"t", "W", "dissipation", "mass", "gummel_iters", "residual"});
  for (const auto& q : rep.samples) ent.row({q.t, q.W, q.dissipation, q.mass, double(q.gummel_iterations), q.residual});
  auto dens = s.csv("run_density.csv", {"t", "x", "N_s"});
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    if (k % static_cast<std::size_t>(s.config.output.cadence) == 0 || k + 1 == tr.times.size())
      for (int i = 0; i < device.n_x(); ++i) dens.row({tr.times[k], device.axis.x(i), tr.Ns[k](i)});
  write_field(s, "run_potential.csv", device, tr.V);

  bool nonincreasing = true, nonnegative = true, within = true;
  int max_iters = 0;
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    const auto& q = rep.samples[k];
    nonnegative = nonnegative && q.W >= 0.0;
    if (k > 0) nonincreasing = nonincreasing && q.W <= rep.samples[k - 1].W + 1e-10;
    within = within && q.mass <= rep.mass_bound(q.t);
    max_iters = std::max(max_iters, q.gummel_iterations);
  }
  json body;
  body["extensions"] = rep.extensions;
  body["beta"] = rep.beta;
  body["C0"] = rep.C0;
  body["growth_rate"] = rep.growth;
  body["mass_envelope_final"] = rep.mass_bound(rep.samples.back().t);
  body["W_initial"] = rep.samples.front().W;
  body["W_final"] = rep.samples.back().W;
  body["W_nonnegative"] = nonnegative;
  body["W_nonincreasing"] = nonincreasing;
  body["mass_within_envelope"] = within;
  body["max_gummel_iterations"] = max_iters;

  if (!s.config.regularization.epsilons.empty()) {
    s.log("regularization sweep");
    const auto rows = epsilon_stability_sweep(model, gopt, N0, s.config.solver.dt, s.config.solver.final_time,
                                              s.config.regularization.epsilons);
    auto sweep = s.csv("epsilon_sweep.csv", {"epsilon", "density_delta_L2", "potential_delta_H1"});
    for (const auto& r : rows) sweep.row({r.epsilon, r.density_delta, r.potential_delta});
  }
  s.summary("run_summary.json", std::move(body));
  return {{"W_final", rep.samples.back().W}, {"max_gummel_iterations", max_iters}};
}

json cmd_convergence(Session& s) {
  const auto& cv = s.config.convergence;
  const auto& g = s.config.grid;
  if (s.config.bloch.potential == "file")
    throw ConfigError("bloch.potential", 0, "a tabulated potential cannot be resampled for a refinement study");
  const bool free = s.config.bloch.potential == "free";
  const int nb = s.config.bloch.n_bands;
  const Vector exact = continuum_free_levels(nb, g.width_z1, g.width_z2);

  std::vector<std::string> cols{"level", "n_y", "n_z", "h"};
  for (int n = 1; n <= nb; ++n) cols.push_back("E_" + std::to_string(n));
  cols.push_back("max_relative_error");
  cols.push_back("order");
  auto bl = s.csv("convergence_bloch.csv", cols);
  std::vector<Vector> levels;
  std::vector<double> errs;
  for (int l = 0; l < cv.levels; ++l) {
    const int nz = (cv.base_nodes - 1) * (1 << l) + 1;
    const UnitCellGrid cell(cv.n_y * (1 << l), CrossSectionGrid(nz, nz, g.width_z1, g.width_z2));
    s.log("Bloch level " + std::to_string(l) + ": " + std::to_string(cell.unknowns()) + " unknowns");
    const LatticePotential w = lattice_potential(s.config, cell);
    BlochOptions o = bloch_options(s.config, s.ctx.seed);
    const BlochSpectrum sp = solve_bloch(assemble_hamiltonian(w, cell), w, cell, o);
    levels.push_back(sp.energies);
    // without a closed form the error is estimated against the next level
    double err = std::numeric_limits<double>::quiet_NaN(), order = err;
    if (free) {
      err = (sp.energies - exact).cwiseQuotient(exact).cwiseAbs().maxCoeff();
      if (l > 0) order = std::log2(errs.back() / err);
    } else if (l >= 2) {
      const double d1 = (levels[l - 1] - levels[l - 2]).cwiseAbs().maxCoeff();
      const double d2 = (levels[l] - levels[l - 1]).cwiseAbs().maxCoeff();
      order = std::log2(d1 / d2);
    }
    errs.push_back(err);
    std::vector<double> row{double(l), double(cell.n_y), double(nz), cell.cross.h1};
    for (int n = 0; n < nb; ++n) row.push_back(sp.energies(n));
    row.push_back(err);
    row.push_back(order);
    bl.row(row);
  }

  // manufactured solution of the linear Poisson problem
  auto po = s.csv("convergence_poisson.csv", {"level", "n_x", "n_z", "error_L2", "error_H1", "order_L2"});
  double prev = 0.0;
  for (int l = 0; l < cv.levels; ++l) {
    const int n = (cv.base_nodes - 1) * (1 << l) + 1;
    const DeviceGrid dev(AxialGrid(n, g.length), CrossSectionGrid(n, n, g.width_z1, g.width_z2));
    const PoissonOperator op(dev);
    Matrix V(dev.n_z(), dev.n_x());
    for (int i = 0; i < n; ++i)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i1 = 0; i1 < n; ++i1)
          V(dev.cross.index(i1, i2), i) = std::sin(pi * dev.axis.x(i) / g.length) *
                                          std::cos(pi * dev.cross.z1(i1) / g.width_z1) *
                                          std::cos(pi * dev.cross.z2(i2) / g.width_z2);
    const double lam = pi * pi * (1 / (g.length * g.length) + 1 / (g.width_z1 * g.width_z1) +
                                  1 / (g.width_z2 * g.width_z2));
    const Matrix e = op.solve(lam * V, Vector::Zero(dev.n_z())) - V;
    const double l2 = discrete_norm(e, dev, NormKind::L2), h1 = discrete_norm(e, dev, NormKind::H1);
    po.row({double(l), double(n), double(n), l2, h1, l > 0 ? std::log2(prev / l2) : std::nan("")});
    prev = l2;
  }
  json body;
  body["bloch_reference"] = free ? "closed-form free levels" : "successive refinements";
  body["bloch_errors"] = to_json(errs);
  s.summary("convergence_summary.json", std::move(body));
  return {{"levels", cv.levels}};
}

}  // namespace

const std::vector<std::string>& command_verbs() {
  static const std::vector<std::string> verbs{"bloch", "poisson", "dd", "kinetic-sweep", "run", "convergence"};
  return verbs;
}

json run_command(const std::string& verb, const RunConfig& config, const CommandContext& ctx) {
  require(ctx.threads >= 1, "--threads must be at least 1");
  Session s(config, ctx, verb, grid_descriptor(config, verb));
  json result;
  if (verb == "bloch") result = cmd_bloch(s);
  else if (verb == "poisson") result = cmd_poisson(s);
  else if (verb == "dd") result = cmd_dd(s);
  else if (verb == "kinetic-sweep") result = cmd_kinetic_sweep(s);
  else if (verb == "run") result = cmd_run(s);
  else if (verb == "convergence") result = cmd_convergence(s);
  else throw InvalidArgument("unknown verb '" + verb + "'");
  json out;
  out["status"] = "ok";
  out["verb"] = verb;
  out["config_hash"] = s.prov.config_hash;
  out["artifacts"] = s.artifacts;
  out["result"] = std::move(result);
  return out;
}

ErrorReport describe_error(const std::exception& e) {
  ErrorReport r;
  json err;
  err["message"] = e.what();
  if (const auto* a = dynamic_cast<const AssumptionViolation*>(&e)) {
    err["type"] = "assumption_violation";
    err["assumption"] = a->assumption();
    r.exit_code = 3;
  } else if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    err["type"] = "config_error";
    err["field"] = c->field;
    err["line"] = c->line;
    r.exit_code = 2;
  } else if (const auto* g = dynamic_cast<const GummelError*>(&e)) {
    err["type"] = "convergence_error";
    err["attained"] = g->attained();
    err["residuals"] = to_json(g->residuals);
    r.exit_code = 4;
  } else if (const auto* v = dynamic_cast<const ConvergenceError*>(&e)) {
    err["type"] = "convergence_error";
    err["attained"] = v->attained();
    r.exit_code = 4;
  } else if (dynamic_cast<const InvalidArgument*>(&e)) {
    err["type"] = "invalid_argument";
    r.exit_code = 2;
  } else {
    err["type"] = "error";
  }
  r.json = {{"status", "error"}, {"error", std::move(err)}};
  return r;
}

}  // namespace nanowire
