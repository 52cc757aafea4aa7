#include "rtstokes/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "rtstokes/error.hpp"
#include "rtstokes/log.hpp"
#include "rtstokes/quadrature.hpp"

namespace rtstokes {

namespace {

bool has_kind(const Mesh &mesh, BoundaryKind kind) {
  return std::any_of(mesh.edges().begin(), mesh.edges().end(), [&](const Edge &e) { return e.kind == kind; });
}

int choose_pin(const Mesh &mesh, const SolverOptions &options) {
  if (has_kind(mesh, BoundaryKind::Neumann)) return -1;
  // Default target: the lower-left corner of the bounding box.
  Vec2 target = options.pin_point;
  if (target.x < -1e299) {
    target = mesh.vertex(0);
    for (const Vec2 &p : mesh.vertices()) target = {std::min(target.x, p.x), std::min(target.y, p.y)};
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const double d = norm(mesh.corner(t, k) - target);
      if (d < best_d - 1e-14) {
        best_d = d;
        best = DofMap::wh_dof(t, k);
      }
    }
  }
  return best;
}

double pcg_checked(const CsrMatrix &a, const std::vector<double> &b, const IcPreconditioner &m, std::vector<double> &x,
                   const PcgOptions &opt, PcgResult &out, const char *what) {
  out = pcg_solve(a, b, m, x, opt);
  if (!out.converged)
    throw SolverError(std::string(what) + ": conjugate gradients did not converge (relative residual " +
                      std::to_string(out.relative_residual) + " after " + std::to_string(out.iterations) +
                      " iterations)");
  return out.relative_residual;
}

}  // namespace

double field_norm2(const Mesh &mesh, const WhFunction &w) {
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double *v = &w.values[3 * t];
    // Exact P1 mass form.
    const double sum = v[0] + v[1] + v[2];
    s += mesh.triangle(t).area / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + sum * sum);
  }
  return s;
}

double field_norm2(const Mesh &mesh, const WhVector &w) { return field_norm2(mesh, w.x) + field_norm2(mesh, w.y); }

namespace {

// Used in the member initializers so bad input never reaches the assembly.
Problem validated(Problem p, const SolverOptions &o) {
  if (!(p.nu > 0.0)) throw InvalidArgument("viscosity must be positive");
  if (!(o.dt > 0.0)) throw InvalidArgument("time step must be positive");
  return p;
}

}  // namespace

ProjectionSolver::ProjectionSolver(const Mesh &mesh, Problem problem, SolverOptions options)
    : mesh_(&mesh),
      problem_(validated(std::move(problem), options)),
      options_(options),
      space_(mesh),
      mass_(assemble_mass(mesh)),
      predictor_(space_, 1.0 / problem_.nu, 1.0 / options.dt, BoundaryKind::Neumann),
      projection_(space_, 1.0 / options.dt, 0.0, BoundaryKind::Dirichlet, choose_pin(mesh, options)),
      predictor_pc_(predictor_.matrix()),
      projection_pc_(projection_.matrix()),
      has_neumann_(has_kind(mesh, BoundaryKind::Neumann)) {
  gram_.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) gram_[t] = element_gram_q(space_, t);
  log_debug("solver: %d elements, predictor nnz %zu, projection nnz %zu, IC shifts %g / %g", mesh.num_triangles(),
            predictor_.matrix().nonzeros(), projection_.matrix().nonzeros(), predictor_pc_.shift(),
            projection_pc_.shift());
}

ProjectionSolver::~ProjectionSolver() = default;

std::vector<double> ProjectionSolver::dirichlet_velocity_values(double t) const {
  const Mesh &mesh = *mesh_;
  std::vector<double> values(space_.dofs().num_vh(), 0.0);
  if (!problem_.velocity) return values;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge &edge = mesh.edge(e);
    if (edge.kind != BoundaryKind::Dirichlet) continue;
    const auto tr = project_trace(mesh, e, [&](const Vec2 &p) { return dot(problem_.velocity(p, t), edge.normal); });
    values[DofMap::edge_dof(e, 0)] = tr[0];
    values[DofMap::edge_dof(e, 1)] = tr[1];
  }
  return values;
}

SolverState ProjectionSolver::initialize() const {
  const Mesh &mesh = *mesh_;
  const int nwh = space_.dofs().num_wh();
  SolverState s;
  s.u = problem_.u0 ? interpolate_vh(space_, problem_.u0) : VhFunction{std::vector<double>(space_.dofs().num_vh())};
  s.psi = problem_.psi0 ? project_wh(mesh, problem_.psi0) : WhFunction{std::vector<double>(nwh)};
  s.q = problem_.grad_psi0 ? project_wh(mesh, problem_.grad_psi0)
                           : WhVector{{std::vector<double>(nwh)}, {std::vector<double>(nwh)}};
  s.psi_b.assign(mesh.num_edges(), {0.0, 0.0});
  if (problem_.psi0) {
    for (int e = 0; e < mesh.num_edges(); ++e)
      if (mesh.edge(e).kind == BoundaryKind::Neumann) s.psi_b[e] = project_trace(mesh, e, problem_.psi0);
  }
  s.delta_psi.values.assign(nwh, 0.0);
  s.sigma_x.coeffs.assign(space_.dofs().num_vh(), 0.0);
  s.sigma_y.coeffs.assign(space_.dofs().num_vh(), 0.0);

  if (problem_.project_initial && problem_.u0) {
    // Step -1 makes the projection use boundary data at t = 0.
    SolverState pre = s;
    pre.step = -1;
    const ProjectionResult r = projection_step(pre, project_wh(mesh, problem_.u0), s.psi_b);
    s.u = r.u;
  }
  s.u_tilde = {{std::vector<double>(nwh)}, {std::vector<double>(nwh)}};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = space_.node_value(s.u, t, k);
      s.u_tilde.x.values[3 * t + k] = v.x;
      s.u_tilde.y.values[3 * t + k] = v.y;
    }
  }
  // Large discrete divergence means u0 was not (discretely) solenoidal.
  const double div = max_divergence(s.u);
  const double scale = max_dof(s.u) / mesh.h_max();
  if (scale > 0.0 && div > 1e-6 * scale)
    log_warn("initial velocity has discrete divergence %.3e (scale %.3e)", div, scale);
  return s;
}

std::vector<double> ProjectionSolver::predictor_rhs(const SolverState &state, int c) const {
  const Mesh &mesh = *mesh_;
  const double dt = options_.dt;
  const double t_next = (state.step + 1) * dt;
  std::vector<double> r(space_.dofs().num_wh(), 0.0);
  const WhFunction &qc = c == 0 ? state.q.x : state.q.y;
  const std::vector<double> mq = mass_.multiply(qc.values);
  const QuadratureRule &mid = midpoint_rule();
  const QuadratureRule &high = degree5_rule();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.triangle(t).area;
    std::array<double, 3> acc{};
    for (std::size_t q = 0; q < mid.nodes.size(); ++q) {
      const Vec2 &ref = mid.nodes[q];
      const Vec2 u = space_.evaluate(state.u, t, map_to_element(mesh, t, ref));
      const double val = mid.weights[q] * (c == 0 ? u.x : u.y) / dt;
      acc[0] += val * (1.0 - ref.x - ref.y);
      acc[1] += val * ref.x;
      acc[2] += val * ref.y;
    }
    if (problem_.forcing) {
      for (std::size_t q = 0; q < high.nodes.size(); ++q) {
        const Vec2 &ref = high.nodes[q];
        const Vec2 f = problem_.forcing(map_to_element(mesh, t, ref), t_next);
        const double val = high.weights[q] * (c == 0 ? f.x : f.y);
        acc[0] += val * (1.0 - ref.x - ref.y);
        acc[1] += val * ref.x;
        acc[2] += val * ref.y;
      }
    }
    for (int l = 0; l < 3; ++l) r[3 * t + l] = area * acc[l] - mq[3 * t + l];
  }
  return r;
}

PredictorResult ProjectionSolver::predictor_step(const SolverState &state) const {
  const Mesh &mesh = *mesh_;
  const double t_next = (state.step + 1) * options_.dt;
  const int nvh = space_.dofs().num_vh();

  auto solve_component = [&](int c, PcgResult &res) {
    std::vector<double> g(nvh, 0.0), ess(nvh, 0.0);
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Edge &edge = mesh.edge(e);
      if (edge.kind == BoundaryKind::Dirichlet && problem_.velocity) {
        for (int k = 0; k < 2; ++k) {
          g[DofMap::edge_dof(e, k)] = -edge_gauss(
              mesh, e,
              [&](const Vec2 &p, double s) {
                const Vec2 ub = problem_.velocity(p, t_next);
                return (c == 0 ? ub.x : ub.y) * (k == 0 ? 1.0 - s : s);
              },
              3);
        }
      } else if (edge.kind == BoundaryKind::Neumann) {
        std::array<double, 2> sb{0.0, 0.0};
        if (problem_.traction)
          sb = project_trace(mesh, e, [&](const Vec2 &p) {
            const Vec2 tr = problem_.traction(p, edge.normal, t_next);
            return c == 0 ? tr.x : tr.y;
          });
        const double nc = c == 0 ? edge.normal.x : edge.normal.y;
        for (int k = 0; k < 2; ++k) ess[DofMap::edge_dof(e, k)] = sb[k] - state.psi_b[e][k] * nc;
      }
    }
    const std::vector<double> rhs = predictor_.reduced_rhs(predictor_rhs(state, c), g, ess);
    std::vector<double> u = c == 0 ? state.u_tilde.x.values : state.u_tilde.y.values;
    pcg_checked(predictor_.matrix(), rhs, predictor_pc_, u, options_.predictor, res, "predictor");
    VhFunction sigma{predictor_.back_substitute(u, g, ess)};
    return std::make_pair(WhFunction{std::move(u)}, std::move(sigma));
  };

  PredictorResult out;
  if (options_.concurrent_components) {
    auto fy = std::async(std::launch::async, [&] { return solve_component(1, out.solves[1]); });
    auto x = solve_component(0, out.solves[0]);
    auto y = fy.get();
    out.u_tilde.x = std::move(x.first);
    out.sigma_x = std::move(x.second);
    out.u_tilde.y = std::move(y.first);
    out.sigma_y = std::move(y.second);
  } else {
    auto x = solve_component(0, out.solves[0]);
    auto y = solve_component(1, out.solves[1]);
    out.u_tilde.x = std::move(x.first);
    out.sigma_x = std::move(x.second);
    out.u_tilde.y = std::move(y.first);
    out.sigma_y = std::move(y.second);
  }
  return out;
}

EdgeTrace ProjectionSolver::update_boundary_pressure(const SolverState &state, const WhVector &u_tilde) const {
  const Mesh &mesh = *mesh_;
  const double t_next = (state.step + 1) * options_.dt;
  EdgeTrace out(mesh.num_edges(), {0.0, 0.0});
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge &edge = mesh.edge(e);
    if (edge.kind != BoundaryKind::Neumann) continue;
    const int t = edge.elements[0];
    if (t < 0) throw MeshError("Neumann edge " + std::to_string(e) + " has no adjacent element");
    const Vec2 &n = edge.normal;
    const Vec2 gx = u_tilde.x.gradient(mesh, t);
    const Vec2 gy = u_tilde.y.gradient(mesh, t);
    // n . (grad u~) n with rows grad u~_x, grad u~_y.
    const double nn = n.x * dot(gx, n) + n.y * dot(gy, n);
    std::array<double, 2> sb{0.0, 0.0};
    if (problem_.traction)
      sb = project_trace(mesh, e, [&](const Vec2 &p) { return dot(problem_.traction(p, n, t_next), n); });
    out[e] = {sb[0] + problem_.nu * nn, sb[1] + problem_.nu * nn};
  }
  return out;
}

std::vector<double> ProjectionSolver::projection_rhs_g(const SolverState &state, const WhVector &u_tilde,
                                                       const EdgeTrace &psi_b_next) const {
  const Mesh &mesh = *mesh_;
  const double dt = options_.dt;
  const QuadratureRule &rule = mfmfe_rule();
  std::vector<double> g(space_.dofs().num_vh(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto &dofs = space_.dofs().element_dofs(t);
    const double area = mesh.triangle(t).area;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Vec2 &ref = rule.nodes[q];
      const Vec2 x = map_to_element(mesh, t, ref);
      const double l0 = 1.0 - ref.x - ref.y;
      const Vec2 ut{l0 * u_tilde.x.values[3 * t] + ref.x * u_tilde.x.values[3 * t + 1] +
                        ref.y * u_tilde.x.values[3 * t + 2],
                    l0 * u_tilde.y.values[3 * t] + ref.x * u_tilde.y.values[3 * t + 1] +
                        ref.y * u_tilde.y.values[3 * t + 2]};
      for (int m = 0; m < 8; ++m) g[dofs[m]] += area * rule.weights[q] * dot(ut, space_.eval_basis(t, m, x)) / dt;
    }
  }
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge &edge = mesh.edge(e);
    if (edge.kind != BoundaryKind::Neumann) continue;
    const double d0 = psi_b_next[e][0] - state.psi_b[e][0];
    const double d1 = psi_b_next[e][1] - state.psi_b[e][1];
    // <d, lambda_k>_e for linear d with endpoint values d0, d1.
    g[DofMap::edge_dof(e, 0)] -= edge.length / 6.0 * (2.0 * d0 + d1);
    g[DofMap::edge_dof(e, 1)] -= edge.length / 6.0 * (d0 + 2.0 * d1);
  }
  return g;
}

ProjectionResult ProjectionSolver::projection_step(const SolverState &state, const WhVector &u_tilde,
                                                   const EdgeTrace &psi_b_next) const {
  const double t = (state.step + 1) * options_.dt;
  const std::vector<double> g = projection_rhs_g(state, u_tilde, psi_b_next);
  const std::vector<double> ess = dirichlet_velocity_values(t);
  const std::vector<double> zero(space_.dofs().num_wh(), 0.0);
  const std::vector<double> rhs = projection_.reduced_rhs(zero, g, ess);
  ProjectionResult out;
  std::vector<double> d = state.delta_psi.values.empty() ? zero : state.delta_psi.values;
  pcg_checked(projection_.matrix(), rhs, projection_pc_, d, options_.projection, out.solve, "projection");
  out.u.coeffs = projection_.back_substitute(d, g, ess);
  out.psi.values = state.psi.values;
  for (std::size_t i = 0; i < d.size(); ++i) out.psi.values[i] += d[i];
  out.delta_psi.values = std::move(d);
  return out;
}

WhVector ProjectionSolver::update_pressure_gradient(const WhVector &q, const VhFunction &u,
                                                    const WhVector &u_tilde) const {
  const Mesh &mesh = *mesh_;
  const double dt = options_.dt;
  WhVector out = q;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int i = 3 * t + k;
      const Vec2 v = space_.node_value(u, t, k);
      out.x.values[i] = q.x.values[i] - (v.x - u_tilde.x.values[i]) / dt;
      out.y.values[i] = q.y.values[i] - (v.y - u_tilde.y.values[i]) / dt;
    }
  }
  return out;
}

double ProjectionSolver::max_divergence(const VhFunction &u) const {
  const Mesh &mesh = *mesh_;
  double worst = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (const Vec2 &ref : midpoint_rule().nodes)
      worst = std::max(worst, std::abs(space_.divergence(u, t, map_to_element(mesh, t, ref))));
  return worst;
}

double ProjectionSolver::max_dof(const VhFunction &u) const {
  double m = 0.0;
  for (double v : u.coeffs) m = std::max(m, std::abs(v));
  return m;
}

double ProjectionSolver::norm2_exact(const VhFunction &v) const {
  const Mesh &mesh = *mesh_;
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    s += integrate(mesh, t, degree5_rule(), [&](const Vec2 &x) {
      const Vec2 w = space_.evaluate(v, t, x);
      return dot(w, w);
    });
  return s;
}

double ProjectionSolver::norm2_q(const VhFunction &v) const {
  double s = 0.0;
  for (int t = 0; t < mesh_->num_triangles(); ++t) {
    const auto &dofs = space_.dofs().element_dofs(t);
    Eigen::Matrix<double, 8, 1> c;
    for (int m = 0; m < 8; ++m) c[m] = v.coeffs[dofs[m]];
    s += c.dot(gram_[t] * c);
  }
  return s;
}

StabilityLedger ProjectionSolver::start_ledger(const SolverState &state) const {
  StabilityLedger l;
  const double dt = options_.dt;
  l.kinetic = 0.5 * norm2_exact(state.u);
  l.pressure = 0.5 * dt * dt * field_norm2(*mesh_, state.q);
  l.initial = l.kinetic + l.pressure;
  return l;
}

StepReport ProjectionSolver::advance(SolverState &state, StabilityLedger *ledger) const {
  const Mesh &mesh = *mesh_;
  const double dt = options_.dt;
  StepReport rep;

  PredictorResult pred = predictor_step(state);
  const EdgeTrace psi_b_next = update_boundary_pressure(state, pred.u_tilde);
  ProjectionResult proj = projection_step(state, pred.u_tilde, psi_b_next);
  WhVector q_next = update_pressure_gradient(state.q, proj.u, pred.u_tilde);

  rep.solves = {pred.solves[0], pred.solves[1], proj.solve};
  rep.max_divergence = max_divergence(proj.u);
  rep.divergence_scale = max_dof(proj.u) / mesh.h_max();

  // (q, u) exactly: both are P1 on every element.
  double qu = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Eigen::Matrix3d m = element_mass(mesh, t);
    Eigen::Vector3d ux, uy, qx, qy;
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = space_.node_value(proj.u, t, k);
      ux[k] = v.x;
      uy[k] = v.y;
      qx[k] = q_next.x.values[3 * t + k];
      qy[k] = q_next.y.values[3 * t + k];
    }
    qu += qx.dot(m * ux) + qy.dot(m * uy);
  }
  const double un = norm2_exact(proj.u);
  const double qn = field_norm2(mesh, q_next);
  rep.q_orthogonality = un > 0.0 && qn > 0.0 ? std::abs(qu) / std::sqrt(un * qn) : 0.0;

  if (ledger) {
    double split = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t)
      split += integrate(mesh, t, degree5_rule(), [&](const Vec2 &x) {
        const Vec2 d = space_.evaluate(proj.u, t, x) - Vec2{pred.u_tilde.x.at(mesh, t, x), pred.u_tilde.y.at(mesh, t, x)};
        return dot(d, d);
      });
    ledger->dissipation += dt / problem_.nu * (norm2_q(pred.sigma_x) + norm2_q(pred.sigma_y));
    ledger->dissipation_exact += dt / problem_.nu * (norm2_exact(pred.sigma_x) + norm2_exact(pred.sigma_y));
    ledger->kinetic = 0.5 * un;
    ledger->splitting += 0.5 * split;
    ledger->pressure = 0.5 * dt * dt * qn;
    ++ledger->steps;
    const double margin = ledger->rhs() > 0.0 ? (ledger->lhs() - ledger->rhs()) / ledger->rhs() : ledger->lhs();
    if (ledger->steps == 1 || margin > ledger->worst_margin) ledger->worst_margin = margin;
    if (ledger->lhs() > ledger->rhs()) ++ledger->violations;
  }

  state.u = std::move(proj.u);
  state.psi = std::move(proj.psi);
  state.delta_psi = std::move(proj.delta_psi);
  state.q = std::move(q_next);
  state.psi_b = psi_b_next;
  state.u_tilde = std::move(pred.u_tilde);
  state.sigma_x = std::move(pred.sigma_x);
  state.sigma_y = std::move(pred.sigma_y);
  ++state.step;
  state.time = state.step * dt;
  rep.step = state.step;
  rep.time = state.time;
  return rep;
}

}  // namespace rtstokes
