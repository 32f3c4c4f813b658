#include "nanowire/kinetic.hpp"
#include "nanowire/transport.hpp"

#include <cmath>
#include <limits>

namespace nanowire {

namespace {

struct Scenario {
  AxialGrid axis;
  MaxwellianTable table;
  Matrix Vnn;
  CrossSection alpha;
  Vector N0;
};

Scenario make_scenario(const DiffusiveLimitConfig& c) {
  require(c.cells >= 4 && c.n_p >= 3, "diffusive-limit grid is too small");
  require(c.final_time > 0.0 && c.cfl > 0.0 && c.cfl <= 1.0, "final time and CFL number must be in range");
  const int nb = static_cast<int>(c.energies.size());
  require(c.masses.size() == nb && c.amplitudes.size() == nb, "band data must have equal lengths");
  for (int b = 0; b < nb; ++b)
    if (c.amplitudes(b) < 0.0)
      throw AssumptionViolation("Assumption 1.1 (nonnegative bounded lattice potential)",
                                "the given potential must be nonnegative");
  Scenario s{AxialGrid(c.cells + 1, 2 * c.half_width, -c.half_width), {}, {}, CrossSection::constant(c.tau), {}};
  s.Vnn.resize(nb, s.axis.n);
  s.N0.resize(s.axis.n);
  for (int i = 0; i < s.axis.n; ++i) {
    const double x = s.axis.x(i);
    const double sech = 1.0 / std::cosh(x);
    for (int b = 0; b < nb; ++b) s.Vnn(b, i) = c.amplitudes(b) * sech * sech;
    s.N0(i) = std::abs(x) < 1.0 ? std::pow(1.0 - x * x, 4) : 0.0;
  }
  const MomentumGrid pg(c.n_p, c.p_max_factor * std::sqrt(c.masses.maxCoeff()));
  s.table = build_maxwellians(c.energies, c.masses, s.Vnn, pg);
  if (c.tabulated) s.alpha = CrossSection::gaussian(nb, pg, c.alpha1, c.alpha2, c.kernel_width);
  return s;
}

Vector centred_derivative(const Vector& u, double h) {
  const Eigen::Index n = u.size();
  Vector d(n);
  d(0) = (u(1) - u(0)) / h;
  d(n - 1) = (u(n - 1) - u(n - 2)) / h;
  for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = (u(i + 1) - u(i - 1)) / (2 * h);
  return d;
}

Vector drift_diffusion_reference(const Scenario& s, const Vector& D, double T, int steps) {
  auto run = [&](int n) {
    Vector N = s.N0;
    for (int k = 0; k < n; ++k) N = advance_density(N, s.table.Vs, D, T / n, s.axis, {0.0, 0.0});
    return N;
  };
  // Richardson extrapolation removes the first-order time error
  return 2.0 * run(2 * steps) - run(steps);
}

struct KineticRun {
  Matrix f;
  double leakage = 0.0;
  int steps = 0;
};

KineticRun run_kinetic(const Scenario& s, const DiffusiveLimitConfig& c, double eta, bool collisions) {
  KineticOptions o;
  o.eta = eta;
  o.collisions = collisions;
  KineticSolver solver(s.table, s.Vnn, s.axis, s.alpha, o);
  KineticRun r;
  r.f = s.table.normalized * s.N0.asDiagonal();
  const double m0 = solver.mass(r.f);
  r.steps = static_cast<int>(std::ceil(c.final_time / (c.cfl * solver.max_stable_dt())));
  const double dt = c.final_time / r.steps;
  for (int k = 0; k < r.steps; ++k) r.f = solver.step(r.f, dt);
  r.leakage = std::abs(m0 - solver.mass(r.f)) / m0;
  return r;
}

}  // namespace

DiffusiveLimitResult diffusive_limit_experiment(const DiffusiveLimitConfig& config, const std::vector<double>& etas,
                                                bool negative_control) {
  require(!etas.empty(), "eta list is empty");
  for (std::size_t k = 0; k < etas.size(); ++k) {
    require(etas[k] > 0.0, "eta must be positive");
    if (k > 0) require(etas[k] < etas[k - 1], "eta list must be decreasing");
  }
  const Scenario s = make_scenario(config);
  const ThetaField theta = solve_theta(s.table, s.alpha);

  DiffusiveLimitResult out;
  out.x = s.axis.nodes();
  out.reference = drift_diffusion_reference(s, theta.D, config.final_time, config.dd_steps);
  out.densities.resize(s.axis.n, static_cast<Eigen::Index>(etas.size()));

  Matrix last_f;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    KineticRun r = run_kinetic(s, config, etas[k], true);
    const Vector N = moments(r.f, s.table, etas[k]).Ns;
    out.densities.col(static_cast<Eigen::Index>(k)) = N;
    DiffusiveLimitRow row;
    row.eta = etas[k];
    row.error = discrete_norm(Vector(N - out.reference), s.axis, NormKind::L2);
    row.order = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                       : std::log(out.rows.back().error / row.error) / std::log(etas[k - 1] / etas[k]);
    row.leakage = r.leakage;
    row.steps = r.steps;
    out.rows.push_back(row);
    last_f = std::move(r.f);
  }

  if (etas.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : out.rows) {
      const double lx = std::log(r.eta), ly = std::log(r.error);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = static_cast<double>(out.rows.size());
    out.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    out.fitted_slope = std::numeric_limits<double>::quiet_NaN();
  }

  // deviation from the local equilibrium against the first Hilbert corrector
  const double eta = etas.back();
  const Vector N = moments(last_f, s.table, eta).Ns;
  const Vector grad = centred_derivative(N, s.axis.h) + N.cwiseProduct(centred_derivative(s.table.Vs, s.axis.h));
  const Matrix f1 = -theta.Theta * grad.asDiagonal();
  const Matrix dev = last_f - kernel_projection(last_f, s.table);
  out.hilbert_ratio =
      std::sqrt(weighted_inner(dev, dev, s.table, s.axis.weights) / weighted_inner(f1, f1, s.table, s.axis.weights)) /
      eta;

  out.free_error = std::numeric_limits<double>::quiet_NaN();
  if (negative_control) {
    const KineticRun r = run_kinetic(s, config, etas.front(), false);
    const Vector Nf = moments(r.f, s.table, etas.front()).Ns;
    out.free_error = discrete_norm(Vector(Nf - out.reference), s.axis, NormKind::L2);
  }
  return out;
}

}  // namespace nanowire
