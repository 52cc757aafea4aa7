#include "rtstokes/verification.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "rtstokes/error.hpp"
#include "rtstokes/log.hpp"
#include "rtstokes/quadrature.hpp"

namespace rtstokes {

namespace {

constexpr double kPi = 3.14159265358979323846;

double time_factor(double t) {
  const double s = std::sin(2.0 * kPi * t);
  return s * s;
}

double time_factor_dt(double t) { return 2.0 * kPi * std::sin(4.0 * kPi * t); }

int step_count(double t_final, double dt) {
  const double n = t_final / dt;
  const int steps = static_cast<int>(std::llround(n));
  if (steps < 1 || std::abs(n - steps) > 1e-8 * std::max(1.0, n))
    throw InvalidArgument("final time must be a positive multiple of the time step");
  return steps;
}

void update_diagnostics(RunDiagnostics &d, const StepReport &r) {
  ++d.steps;
  if (r.divergence_scale > 0.0) d.max_divergence_ratio = std::max(d.max_divergence_ratio, r.max_divergence / r.divergence_scale);
  d.max_q_orthogonality = std::max(d.max_q_orthogonality, r.q_orthogonality);
  for (const PcgResult &s : r.solves) d.max_iterations = std::max(d.max_iterations, s.iterations);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FlowValues exact_test1(const Vec2 &x, double t) {
  const double s = time_factor(t);
  return {{-std::cos(x.x) * std::sin(x.y) * s, std::sin(x.x) * std::cos(x.y) * s},
          0.25 * (std::cos(2.0 * x.x) + std::cos(2.0 * x.y)) * s};
}

Vec2 exact_test1_grad_psi(const Vec2 &x, double t) {
  const double s = time_factor(t);
  return {-0.5 * std::sin(2.0 * x.x) * s, -0.5 * std::sin(2.0 * x.y) * s};
}

std::array<Vec2, 2> exact_test1_grad_u(const Vec2 &x, double t) {
  const double s = time_factor(t);
  const double ss = std::sin(x.x) * std::sin(x.y) * s;
  const double cc = std::cos(x.x) * std::cos(x.y) * s;
  return {Vec2{ss, -cc}, Vec2{cc, -ss}};
}

Vec2 test1_forcing(const Vec2 &x, double t, double nu) {
  // lap u = -2 u for this velocity.
  const double s = time_factor(t);
  const double a = time_factor_dt(t) + 2.0 * nu * s;
  const Vec2 gp = exact_test1_grad_psi(x, t);
  return {-std::cos(x.x) * std::sin(x.y) * a + gp.x, std::sin(x.x) * std::cos(x.y) * a + gp.y};
}

Vec2 test1_traction(const Vec2 &x, const Vec2 &n, double t, double nu) {
  const auto g = exact_test1_grad_u(x, t);
  const double psi = exact_test1(x, t).psi;
  return {-nu * dot(g[0], n) + psi * n.x, -nu * dot(g[1], n) + psi * n.y};
}

Problem test1_problem(double nu) {
  Problem p;
  p.nu = nu;
  p.u0 = [](const Vec2 &x) { return exact_test1(x, 0.0).u; };
  p.psi0 = [](const Vec2 &x) { return exact_test1(x, 0.0).psi; };
  p.grad_psi0 = [](const Vec2 &x) { return exact_test1_grad_psi(x, 0.0); };
  p.velocity = [](const Vec2 &x, double t) { return exact_test1(x, t).u; };
  p.traction = [nu](const Vec2 &x, const Vec2 &n, double t) { return test1_traction(x, n, t, nu); };
  p.forcing = [nu](const Vec2 &x, double t) { return test1_forcing(x, t, nu); };
  return p;
}

BoundaryRule test1_boundary(int scenario, int base_cells) {
  if (scenario != 1 && scenario != 2) throw InvalidArgument("boundary scenario must be 1 or 2");
  const double tol = 1e-9;
  if (scenario == 1) {
    return [tol](const Vec2 &m, std::array<int, 2>) {
      // Counterclockwise: first half of each side is Dirichlet.
      if (std::abs(m.y + 0.5) < tol) return m.x < 0.0 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
      if (std::abs(m.x - 0.5) < tol) return m.y < 0.0 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
      if (std::abs(m.y - 0.5) < tol) return m.x > 0.0 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
      return m.y > 0.0 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
    };
  }
  const double cut = -0.5 + 1.0 / base_cells;
  return [tol, cut](const Vec2 &m, std::array<int, 2>) {
    if (std::abs(m.y + 0.5) < tol && m.x < cut) return BoundaryKind::Neumann;
    return BoundaryKind::Dirichlet;
  };
}

Mesh test1_mesh(int level, int scenario, int base_cells, double perturbation, std::uint64_t seed) {
  if (level < 0) throw InvalidArgument("refinement level must be nonnegative");
  Mesh mesh = structured_rectangle(base_cells, base_cells, {-0.5, -0.5}, {0.5, 0.5}, DiagonalPattern::Uniform,
                                   test1_boundary(scenario, base_cells));
  if (perturbation > 0.0) mesh = perturb_mesh(mesh, perturbation, seed);
  for (int l = 0; l < level; ++l) mesh = uniform_refine(mesh);
  return mesh;
}

double l2_error(const Mesh &mesh, const WhFunction &w, const ScalarField &exact) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    s += integrate(mesh, t, degree5_rule(), [&](const Vec2 &x) {
      const double d = w.at(mesh, t, x) - exact(x);
      return d * d;
    });
  return std::sqrt(s);
}

FieldErrors l2_error(const Rt1Space &space, const VhFunction &u, const WhFunction &psi, const VectorField &exact_u,
                     const ScalarField &exact_psi) {
  const Mesh &mesh = space.mesh();
  double ex = 0.0, ey = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const QuadratureRule &rule = degree5_rule();
    double sx = 0.0, sy = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Vec2 x = map_to_element(mesh, t, rule.nodes[q]);
      const Vec2 d = space.evaluate(u, t, x) - exact_u(x);
      sx += rule.weights[q] * d.x * d.x;
      sy += rule.weights[q] * d.y * d.y;
    }
    ex += mesh.triangle(t).area * sx;
    ey += mesh.triangle(t).area * sy;
  }
  return {l2_error(mesh, psi, exact_psi), std::sqrt(ex), std::sqrt(ey)};
}

void ErrorHistory::record(const FieldErrors &e) {
  steps_.push_back(e);
  max_.psi = std::max(max_.psi, e.psi);
  max_.ux = std::max(max_.ux, e.ux);
  max_.uy = std::max(max_.uy, e.uy);
}

std::vector<double> convergence_rate(std::span<const double> errors, std::span<const double> sizes) {
  if (errors.size() != sizes.size()) throw InvalidArgument("errors and sizes differ in length");
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (!(sizes[i] > 0.0) || !(sizes[i + 1] > 0.0) || sizes[i] == sizes[i + 1])
      throw InvalidArgument("step sizes must be positive and distinct");
    if (!(errors[i] > 0.0) || !(errors[i + 1] > 0.0)) {
      rates.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    rates.push_back(std::log(errors[i] / errors[i + 1]) / std::log(sizes[i] / sizes[i + 1]));
  }
  return rates;
}

void ConvergenceTable::add(int level, double size, const FieldErrors &e) {
  levels.push_back(level);
  sizes.push_back(size);
  errors.push_back(e);
}

void ConvergenceTable::compute_rates() {
  std::vector<double> p, x, y;
  for (const FieldErrors &e : errors) {
    p.push_back(e.psi);
    x.push_back(e.ux);
    y.push_back(e.uy);
  }
  const auto rp = convergence_rate(p, sizes), rx = convergence_rate(x, sizes), ry = convergence_rate(y, sizes);
  rates.clear();
  for (std::size_t i = 0; i < rp.size(); ++i) rates.push_back({rp[i], rx[i], ry[i]});
}

bool ConvergenceTable::has_undefined_rate() const {
  for (const FieldErrors &r : rates)
    if (std::isnan(r.psi) || std::isnan(r.ux) || std::isnan(r.uy)) return true;
  return false;
}

void ConvergenceTable::write_csv(std::ostream &out) const {
  out << "level," << parameter << ",L2_psi,L2_ux,L2_uy,r_psi,r_ux,r_uy\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    out << levels[i] << "," << sizes[i] << "," << errors[i].psi << "," << errors[i].ux << "," << errors[i].uy;
    if (i > 0 && i - 1 < rates.size())
      out << "," << rates[i - 1].psi << "," << rates[i - 1].ux << "," << rates[i - 1].uy;
    else
      out << ",,,";
    out << "\n";
  }
}

FieldErrors run_test1_once(const Mesh &mesh, double nu, double dt, double t_final, const SolverOptions &options,
                           RunDiagnostics *diag, ErrorHistory *history) {
  const auto t0 = std::chrono::steady_clock::now();
  SolverOptions opt = options;
  opt.dt = dt;
  ProjectionSolver solver(mesh, test1_problem(nu), opt);
  SolverState state = solver.initialize();
  const int steps = step_count(t_final, dt);
  ErrorHistory local;
  ErrorHistory &hist = history ? *history : local;
  RunDiagnostics d;
  for (int n = 0; n < steps; ++n) {
    const StepReport r = solver.advance(state);
    update_diagnostics(d, r);
    const double t = state.time;
    hist.record(l2_error(
        solver.space(), state.u, state.psi, [t](const Vec2 &x) { return exact_test1(x, t).u; },
        [t](const Vec2 &x) { return exact_test1(x, t).psi; }));
  }
  d.seconds = seconds_since(t0);
  if (diag) *diag = d;
  log_info("test1 run: %d elements, dt %g, %d steps, %.1f s, max errors psi %.4e ux %.4e uy %.4e",
           mesh.num_triangles(), dt, steps, d.seconds, hist.max().psi, hist.max().ux, hist.max().uy);
  return hist.max();
}

Test1Result run_test1(const Test1Config &config) {
  Test1Result res;
  if (config.mode == StudyMode::Space) {
    res.table.parameter = "h";
    int row = 0;
    for (int level : config.levels) {
      const Mesh mesh = test1_mesh(level, config.scenario, config.base_cells, config.perturbation, config.seed);
      RunDiagnostics d;
      const FieldErrors e = run_test1_once(mesh, config.nu, config.dt, config.t_final, config.solver, &d);
      res.table.add(level, mesh.h_max(), e);
      res.runs.push_back(d);
      if (config.on_run) config.on_run(row, e, d);
      ++row;
    }
  } else {
    res.table.parameter = "dt";
    const Mesh mesh =
        test1_mesh(config.time_level, config.scenario, config.base_cells, config.perturbation, config.seed);
    int row = 0;
    for (double dt : config.dts) {
      RunDiagnostics d;
      const FieldErrors e = run_test1_once(mesh, config.nu, dt, config.t_final, config.solver, &d);
      res.table.add(row, dt, e);
      res.runs.push_back(d);
      if (config.on_run) config.on_run(row, e, d);
      ++row;
    }
  }
  res.table.compute_rates();
  return res;
}

Mesh cavity_mesh(int cells) {
  if (cells < 2 || cells % 2) throw InvalidArgument("cavity grid needs an even number of cells per side");
  return structured_rectangle(cells, cells, {0.0, 0.0}, {1.0, 1.0}, DiagonalPattern::UnionJack,
                              [](const Vec2 &, std::array<int, 2>) { return BoundaryKind::Dirichlet; });
}

Problem cavity_problem(double lid, double bottom, double nu) {
  Problem p;
  p.nu = nu;
  p.velocity = [lid, bottom](const Vec2 &x, double) {
    constexpr double tol = 1e-12;
    if (x.y > 1.0 - tol) return Vec2{lid, 0.0};
    if (x.y < tol) return Vec2{bottom, 0.0};
    return Vec2{0.0, 0.0};
  };
  return p;
}

FlowValues sample_flow(const Rt1Space &space, const VhFunction &u, const WhFunction &psi, const Vec2 &p) {
  const Mesh &mesh = space.mesh();
  FlowValues acc;
  int hits = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto lam = barycentric(mesh, t, p);
    if (lam[0] < -1e-12 || lam[1] < -1e-12 || lam[2] < -1e-12) continue;
    acc.u += space.evaluate(u, t, p);
    acc.psi += psi.at(mesh, t, p);
    ++hits;
  }
  if (!hits) throw InvalidArgument("sample point outside the mesh");
  acc.u *= 1.0 / hits;
  acc.psi /= hits;
  return acc;
}

CavityResult run_cavity(const CavityConfig &config) {
  const auto t0 = std::chrono::steady_clock::now();
  CavityResult res;
  res.mesh = cavity_mesh(config.cells);
  SolverOptions opt = config.solver;
  opt.dt = config.dt;
  opt.pin_point = {0.0, 0.0};
  const Problem problem = cavity_problem(config.lid_velocity, config.bottom_velocity, config.nu);
  ProjectionSolver solver(res.mesh, problem, opt);
  const Rt1Space &space = solver.space();
  SolverState state = solver.initialize();
  const int steps = step_count(config.t_final, config.dt);
  std::vector<double> prev;
  for (int n = 0; n < steps; ++n) {
    prev = state.u.coeffs;
    update_diagnostics(res.diagnostics, solver.advance(state));
  }
  for (std::size_t i = 0; i < prev.size(); ++i)
    res.final_change = std::max(res.final_change, std::abs(state.u.coeffs[i] - prev[i]));

  const int ns = std::max(config.samples, 3);
  const double m = config.bottom_velocity > 0.0 ? -1.0 : (config.bottom_velocity < 0.0 ? 1.0 : 0.0);
  for (int i = 0; i < ns; ++i) {
    const double c = static_cast<double>(i) / (ns - 1);
    const FlowValues v = sample_flow(space, state.u, state.psi, {0.5, c});
    res.vertical.push_back({c, v.u.x, v.u.y, v.psi});
    const FlowValues h = sample_flow(space, state.u, state.psi, {c, 0.5});
    res.horizontal.push_back({c, h.u.x, h.u.y, h.psi});
  }
  if (m != 0.0) {
    for (int i = 0; i < ns; ++i) {
      const double c = static_cast<double>(i) / (ns - 1);
      // Interior samples only: the wall values are data, not solution.
      if (i == 0 || i == ns - 1) continue;
      const double a = sample_flow(space, state.u, state.psi, {0.5, c}).u.x;
      const double b = sample_flow(space, state.u, state.psi, {0.5, 1.0 - c}).u.x;
      res.symmetry_error = std::max(res.symmetry_error, std::abs(a + m * b));
      const double h = res.horizontal[i].ux;
      if (m > 0.0) res.symmetry_error = std::max(res.symmetry_error, std::abs(h));
    }
  }
  for (int e = 0; e < res.mesh.num_edges(); ++e) {
    const Edge &edge = res.mesh.edge(e);
    if (!edge.on_boundary()) continue;
    res.net_boundary_flux +=
        0.5 * edge.length * (state.u.coeffs[DofMap::edge_dof(e, 0)] + state.u.coeffs[DofMap::edge_dof(e, 1)]);
  }
  res.lid_datum = problem.velocity({0.5, 1.0}, config.t_final).x;
  res.lid_computed = sample_flow(space, state.u, state.psi, {0.5, 1.0}).u.x;
  res.diagnostics.seconds = seconds_since(t0);
  res.state = std::move(state);
  return res;
}

void write_profiles_csv(const CavityResult &result, std::ostream &out) {
  out << "line,coord,ux,uy,psi\n" << std::setprecision(10);
  for (const ProfileSample &s : result.vertical)
    out << "x=0.5," << s.coord << "," << s.ux << "," << s.uy << "," << s.psi << "\n";
  for (const ProfileSample &s : result.horizontal)
    out << "y=0.5," << s.coord << "," << s.ux << "," << s.uy << "," << s.psi << "\n";
}

Problem decay_problem(double nu) {
  Problem p;
  p.nu = nu;
  p.u0 = [](const Vec2 &x) {
    const double g = x.x * (1.0 - x.x), h = x.y * (1.0 - x.y);
    return Vec2{g * g * 2.0 * h * (1.0 - 2.0 * x.y), -2.0 * g * (1.0 - 2.0 * x.x) * h * h};
  };
  p.project_initial = true;
  return p;
}

DecayResult run_decay(const DecayConfig &config) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mesh mesh = cavity_mesh(config.cells);
  SolverOptions opt = config.solver;
  opt.dt = config.dt;
  ProjectionSolver solver(mesh, decay_problem(config.nu), opt);
  SolverState state = solver.initialize();
  DecayResult res;
  res.ledger = solver.start_ledger(state);
  for (int n = 0; n < config.steps; ++n) {
    update_diagnostics(res.diagnostics, solver.advance(state, &res.ledger));
    if (res.ledger.lhs_exact() > res.ledger.rhs()) ++res.violations_exact;
  }
  res.diagnostics.seconds = seconds_since(t0);
  return res;
}

}  // namespace rtstokes
