#include "nanowire/selfconsistent.hpp"

#include <algorithm>
#include <cmath>

namespace nanowire {

double EntropyReport::mass_bound(double t) const {
  const double W0 = samples.empty() ? 0.0 : samples.front().W;
  return (W0 + C0) * std::exp(growth * t);
}

SelfConsistentSolver::SelfConsistentSolver(DeviceModel model, GummelOptions options)
    : model_(std::move(model)), opts_(options), op_(model_.grid) {
  const auto& cross = model_.grid.cross;
  require(model_.bands.count() >= 1, "at least one band is required");
  require(model_.bands.g.rows() == cross.size(), "band densities must live on the cross-section nodes");
  if (!(model_.boundary_density > 0.0))
    throw AssumptionViolation("Assumption 3.3 (positive constant boundary density)",
                              "boundary density must be positive");
  require(model_.tau > 0.0, "relaxation time must be positive");
  require(model_.epsilon >= 0.0, "regularization radius must be nonnegative");
  require(opts_.tol > 0.0 && opts_.max_iterations > 0, "Gummel tolerance and iteration cap must be positive");
  require(opts_.damping > 0.0 && opts_.damping <= 1.0, "Gummel damping must lie in (0, 1]");
  if ((model_.bands.masses.array() <= 0.0).any())
    throw AssumptionViolation("Assumption 3.1 (diffusion bounded above and below)",
                              "every effective mass must be positive");
  if (model_.diffusion_override && !(*model_.diffusion_override > 0.0))
    throw AssumptionViolation("Assumption 3.1 (diffusion bounded above and below)",
                              "the diffusion constant must be positive");
  if (model_.boundary_potential.size() == 0) model_.boundary_potential = Vector::Zero(cross.size());
  check_boundary_potential(model_.boundary_potential, cross);
  model_.poisson.epsilon = model_.epsilon;
  Vbar_ = model_.boundary_potential * Vector::Ones(model_.grid.n_x()).transpose();
}

PoissonResult SelfConsistentSolver::electrostatics(const Vector& Ns, const Matrix& guess) const {
  return solve_nonlinear_poisson(op_, Ns, model_.bands, model_.boundary_potential, model_.poisson, guess);
}

Vector SelfConsistentSolver::diffusion(const Matrix& Vnn) const {
  if (model_.diffusion_override) return Vector::Constant(Vnn.cols(), *model_.diffusion_override);
  return diffusion_constant_alpha(model_.bands.energies, model_.bands.masses, Vnn, model_.tau);
}

Vector SelfConsistentSolver::pin_ends(Vector Ns) const {
  Ns(0) = model_.boundary_density;
  Ns(Ns.size() - 1) = model_.boundary_density;
  return Ns;
}

double SelfConsistentSolver::residual_norm(const Vector& dN, double dt) const {
  const auto& axis = model_.grid.axis;
  const double l2 = discrete_norm(dN, axis, NormKind::L2);
  const double h1 = discrete_norm(dN, axis, NormKind::H1);
  return std::sqrt(l2 * l2 + (dt > 0.0 ? dt : 1.0) * h1 * h1);
}

GummelState SelfConsistentSolver::gummel_step(const GummelState& state, const Vector& previous, double dt) const {
  GummelState next = state;
  const PoissonResult pr = electrostatics(state.Ns, state.V);
  next.V = pr.V;
  const Vector D = diffusion(pr.eq.Vnn);
  const DirichletData bc{model_.boundary_density, model_.boundary_density};
  const Vector target = dt > 0.0 ? advance_density(previous, pr.eq.partition.Vs, D, dt, model_.grid.axis, bc)
                                 : steady_state(pr.eq.partition.Vs, D, model_.grid.axis, bc);
  const Vector update = state.damping * target + (1.0 - state.damping) * state.Ns;
  const double r = residual_norm(update - state.Ns, dt);
  if (!state.residuals.empty() && r > state.residuals.back() && state.damping > opts_.min_damping) {
    next.damping = std::max(opts_.min_damping, 0.5 * state.damping);
    next.damping_active = true;
  }
  next.Ns = update;
  next.residuals.push_back(r);
  next.iteration = state.iteration + 1;
  next.converged = r <= opts_.tol;
  return next;
}

GummelState SelfConsistentSolver::solve_step(const Vector& previous, double dt, const Matrix& guess) const {
  require(previous.size() == model_.grid.n_x(), "density must have one value per axial node");
  GummelState s;
  s.Ns = pin_ends(previous);
  s.V = guess;
  s.damping = opts_.damping;
  while (!s.converged) {
    if (s.iteration >= opts_.max_iterations)
      throw GummelError("Gummel iteration did not converge in " + std::to_string(opts_.max_iterations) +
                            " iterations",
                        s.residuals.back(), s.residuals);
    s = gummel_step(s, previous, dt);
    if (!std::isfinite(s.residuals.back()))
      throw GummelError("Gummel iteration produced a non-finite residual", s.residuals.back(), s.residuals);
  }
  // potential consistent with the accepted density
  s.V = electrostatics(s.Ns, s.V).V;
  return s;
}

GummelState SelfConsistentSolver::solve_steady(const Vector& guess) const { return solve_step(guess, 0.0); }

EntropyValues SelfConsistentSolver::relative_entropy(const Vector& Ns, const Matrix& V) const {
  const auto& grid = model_.grid;
  const auto& bands = model_.bands;
  require(Ns.size() == grid.n_x() && V.rows() == grid.n_z() && V.cols() == grid.n_x(),
          "density and potential must match the device grid");
  const Mollifier R(grid, model_.epsilon);
  const EffectiveQuantities eq = effective_quantities(R.apply(V), bands, grid.cross, model_.epsilon);
  const EffectiveQuantities bar = effective_quantities(R.apply(Vbar_), bands, grid.cross, model_.epsilon);
  const double Nb = model_.boundary_density;

  EntropyValues out;
  for (int i = 0; i < grid.n_x(); ++i) {
    double s = 0.0;
    for (int n = 0; n < bands.count(); ++n) {
      const double Nn = Ns(i) * eq.weights(n, i);
      const double Nbar = Nb * bar.weights(n, i);
      if (Nn > 0.0) {
        // ln(N_n / Nbar_n) from log-weights, which stay finite when the weights underflow
        const double log_w = -(bands.energies(n) + eq.Vnn(n, i)) + eq.partition.Vs(i);
        const double log_wbar = -(bands.energies(n) + bar.Vnn(n, i)) + bar.partition.Vs(i);
        s += Nn * (std::log(Ns(i) / Nb) + log_w - log_wbar);
      }
      s += Nbar - Nn;
    }
    out.entropy += grid.axis.weights(i) * s;
  }
  out.field = 0.5 * gradient_norm_squared(Matrix(V - Vbar_), grid);
  out.W = out.entropy + out.field;

  const Vector& Vs = eq.partition.Vs;
  const Vector Df = face_diffusion(diffusion(eq.Vnn));
  const double h = grid.axis.h;
  for (int i = 0; i + 1 < grid.n_x(); ++i) {
    if (!(Ns(i) > 0.0 && Ns(i + 1) > 0.0)) continue;
    const double uL = Ns(i) * std::exp(Vs(i)), uR = Ns(i + 1) * std::exp(Vs(i + 1));
    const double flux = Df(i) / h * bernoulli(Vs(i + 1) - Vs(i)) * std::exp(-Vs(i)) * (uR - uL);
    out.dissipation += flux * (std::log(uR) - std::log(uL));
  }
  return out;
}

EntropyReport SelfConsistentSolver::empty_report() const {
  const auto& grid = model_.grid;
  const Mollifier R(grid, model_.epsilon);
  const EffectiveQuantities bar = effective_quantities(R.apply(Vbar_), model_.bands, grid.cross, model_.epsilon);
  EntropyReport rep;
  // ln ubar = ln N_b + Vs(Vbar)
  const Vector& Vs = bar.partition.Vs;
  for (int i = 0; i + 1 < grid.n_x(); ++i) rep.beta = std::max(rep.beta, std::abs(Vs(i + 1) - Vs(i)) / grid.axis.h);
  const double D2 = model_.diffusion_override ? *model_.diffusion_override
                                              : model_.tau / model_.bands.masses.minCoeff();
  rep.growth = 0.5 * rep.beta * rep.beta * D2;
  rep.C0 = (std::exp(1.0) - 1.0) * model_.boundary_density * grid.axis.length;
  return rep;
}

Trajectory SelfConsistentSolver::run_transient(const Vector& N0, double dt, double final_time) const {
  require(N0.size() == model_.grid.n_x(), "initial density must have one value per axial node");
  require(dt > 0.0 && final_time > 0.0, "time step and final time must be positive");
  if (!(N0.array() >= 0.0).all())
    throw AssumptionViolation("Assumption 3.2 (nonnegative initial density)", "initial density has a negative value");
  Vector N = N0;
  if (model_.epsilon > 0.0) N = N.cwiseMin(1.0 / model_.epsilon);
  N = pin_ends(N);

  Trajectory out;
  out.report = empty_report();
  const auto& w = model_.grid.axis.weights;
  Matrix V = electrostatics(N).V;
  const EntropyValues e0 = relative_entropy(N, V);
  out.times.push_back(0.0);
  out.Ns.push_back(N);
  out.report.samples.push_back({0.0, e0.W, e0.dissipation, w.dot(N), 0, 0.0});

  const int steps = static_cast<int>(std::ceil(final_time / dt - 1e-12));
  const double step = final_time / steps;
  for (int k = 1; k <= steps; ++k) {
    const GummelState s = solve_step(N, step, V);
    N = s.Ns;
    V = s.V;
    const EntropyValues e = relative_entropy(N, V);
    const double t = k * step;
    out.times.push_back(t);
    out.Ns.push_back(N);
    out.report.samples.push_back({t, e.W, e.dissipation, w.dot(N), s.iteration, s.residuals.back()});
  }
  out.V = V;
  return out;
}

std::vector<EpsilonRow> epsilon_stability_sweep(const DeviceModel& model, const GummelOptions& options,
                                                const Vector& N0, double dt, double final_time,
                                                const std::vector<double>& epsilons) {
  require(!epsilons.empty(), "epsilon list is empty");
  DeviceModel base = model;
  base.epsilon = 0.0;
  const Trajectory ref = SelfConsistentSolver(base, options).run_transient(N0, dt, final_time);
  std::vector<EpsilonRow> rows;
  for (double eps : epsilons) {
    EpsilonRow row;
    row.epsilon = eps;
    if (eps > 0.0) {
      DeviceModel m = model;
      m.epsilon = eps;
      const Trajectory tr = SelfConsistentSolver(m, options).run_transient(N0, dt, final_time);
      row.density_delta = discrete_norm(Vector(tr.Ns.back() - ref.Ns.back()), model.grid.axis, NormKind::L2);
      row.potential_delta = discrete_norm(Matrix(tr.V - ref.V), model.grid, NormKind::H1);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nanowire
