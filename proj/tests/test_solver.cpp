#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "fixtures.hpp"
#include "rtstokes/assembly.hpp"
#include "rtstokes/error.hpp"
#include "rtstokes/quadrature.hpp"
#include "rtstokes/solver.hpp"
#include "rtstokes/verification.hpp"

using namespace rtstokes;

namespace {

SolverOptions options(double dt) {
  SolverOptions o;
  o.dt = dt;
  o.predictor.rel_tol = 1e-14;
  o.projection.rel_tol = 1e-14;
  return o;
}

double max_abs(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Eigen::Map<const Eigen::VectorXd> view(const std::vector<double> &v) { return {v.data(), static_cast<long>(v.size())}; }

double rel_diff(const std::vector<double> &a, const Eigen::VectorXd &b) {
  return (view(a) - b).norm() / std::max(b.norm(), 1e-300);
}

WhVector random_wh(const Mesh &m, std::mt19937_64 &rng) {
  return {{fixtures::random_vector(rng, 3 * m.num_triangles())}, {fixtures::random_vector(rng, 3 * m.num_triangles())}};
}

// (f, lambda_l)_E for every W_h basis function, P2-exact rule.
template <class F>
Eigen::VectorXd load(const Mesh &m, F &&f) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(3 * m.num_triangles());
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int l = 0; l < 3; ++l)
      r(3 * t + l) = gauss3(m, t, [&](const Vec2 &p) { return f(t, p) * barycentric(m, t, p)[l]; });
  return r;
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const Mesh m = test1_mesh(0, 1, 4);
  const ProjectionSolver s(m, Problem{}, options(1e-2));
  SolverState st = s.initialize();
  for (int n = 0; n < 5; ++n) s.advance(st);
  CHECK(st.step == 5);
  CHECK(st.time == doctest::Approx(0.05));
  CHECK(max_abs(st.u.coeffs) == 0.0);
  CHECK(max_abs(st.psi.values) == 0.0);
  CHECK(max_abs(st.q.x.values) == 0.0);
  CHECK(max_abs(st.q.y.values) == 0.0);
}

TEST_CASE("initialization") {
  const Mesh m = test1_mesh(0, 1, 4);
  const ProjectionSolver s(m, test1_problem(1.0), options(1e-3));
  const SolverState st = s.initialize();
  CHECK(max_abs(st.u.coeffs) <= 1e-15);
  CHECK(max_abs(st.psi.values) <= 1e-15);

  Problem p;
  p.u0 = [](const Vec2 &x) { return Vec2{x.y, 0.0}; };
  p.psi0 = [](const Vec2 &x) { return x.x * x.x + 3 * x.y; };
  p.grad_psi0 = [](const Vec2 &x) { return Vec2{2 * x.x, 3.0}; };
  const ProjectionSolver s2(m, p, options(1e-3));
  const SolverState st2 = s2.initialize();
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) {
      CHECK(st2.q.node(t, k).x == doctest::Approx(2 * m.corner(t, k).x).epsilon(1e-12));
      CHECK(st2.q.node(t, k).y == doctest::Approx(3.0).epsilon(1e-12));
    }
  CHECK(s2.max_divergence(st2.u) <= 1e-12);

  CHECK_THROWS_AS(ProjectionSolver(m, p, options(0.0)), InvalidArgument);
  p.nu = -1.0;
  CHECK_THROWS_AS(ProjectionSolver(m, p, options(1e-3)), InvalidArgument);
}

TEST_CASE("predictor matches the dense saddle oracle") {
  const Mesh m = fixtures::small_distorted(fixtures::neumann_below(0.0));
  const double dt = 0.05, nu = 0.7;
  Problem p;
  p.nu = nu;
  const ProjectionSolver s(m, p, options(dt));
  const Rt1Space &space = s.space();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    SolverState st = s.initialize();
    // Divergence-free linear velocity (P1, so the mass term is exact) and a random q.
    std::uniform_real_distribution<double> u(-1, 1);
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    st.u = interpolate_vh(space, [=](const Vec2 &x) { return Vec2{a + b * x.x + c * x.y, d + c * 0.5 * x.x - b * x.y}; });
    st.q = random_wh(m, rng);
    const PredictorResult r = s.predictor_step(st);

    const std::vector<char> ess = essential_mask(space, BoundaryKind::Neumann);
    const std::vector<double> zk(space.dofs().num_vh(), 0.0);
    for (int comp = 0; comp < 2; ++comp) {
      const WhFunction &q = comp == 0 ? st.q.x : st.q.y;
      const Eigen::VectorXd rhs = load(m, [&](int t, const Vec2 &x) {
        const Vec2 v = space.evaluate(st.u, t, x);
        return (comp == 0 ? v.x : v.y) / dt - q.at(m, t, x);
      });
      const std::vector<double> rv(rhs.data(), rhs.data() + rhs.size());
      const oracle::SaddleSolution want = oracle::solve_dense(space, 1.0 / nu, 1.0 / dt, ess, zk, rv, zk);
      const WhFunction &ut = comp == 0 ? r.u_tilde.x : r.u_tilde.y;
      const VhFunction &sig = comp == 0 ? r.sigma_x : r.sigma_y;
      CHECK(rel_diff(ut.values, want.cell) <= 1e-10);
      CHECK(rel_diff(sig.coeffs, want.flux) <= 1e-10);
    }
  }
}

TEST_CASE("projection matches the dense saddle oracle") {
  const double dt = 0.02;
  std::mt19937_64 rng(12);
  for (bool closed : {false, true}) {
    CAPTURE(closed);
    const Mesh m = fixtures::small_distorted(closed ? fixtures::all(BoundaryKind::Dirichlet)
                                                    : fixtures::neumann_below(0.0));
    const ProjectionSolver s(m, Problem{}, options(dt));
    CHECK((s.pinned_dof() >= 0) == closed);
    const Rt1Space &space = s.space();
    for (int trial = 0; trial < 5; ++trial) {
      SolverState st = s.initialize();
      const WhVector ut = random_wh(m, rng);
      const ProjectionResult r = s.projection_step(st, ut, st.psi_b);

      // G_k = (u~, phi_k)_Q / dt with the vertex/centroid rule.
      std::vector<double> g(space.dofs().num_vh(), 0.0);
      for (int t = 0; t < m.num_triangles(); ++t) {
        const auto &dofs = space.dofs().element_dofs(t);
        const std::array<Vec2, 4> qp{m.corner(t, 0), m.corner(t, 1), m.corner(t, 2), m.centroid(t)};
        const std::array<double, 4> qw{1.0 / 12, 1.0 / 12, 1.0 / 12, 0.75};
        for (int i = 0; i < 4; ++i)
          for (int k = 0; k < 8; ++k)
            g[dofs[k]] += m.triangle(t).area * qw[i] * dot(ut.at(m, t, qp[i]), space.eval_basis(t, k, qp[i])) / dt;
      }
      const std::vector<double> zk(space.dofs().num_vh(), 0.0), zn(space.dofs().num_wh(), 0.0);
      const oracle::SaddleSolution want = oracle::solve_dense(space, 1.0 / dt, 0.0, essential_mask(space, BoundaryKind::Dirichlet),
                                                              g, zn, zk, s.pinned_dof());
      CHECK(rel_diff(r.u.coeffs, want.flux) <= 1e-10);
      CHECK(rel_diff(r.delta_psi.values, want.cell) <= 1e-10);
      CHECK(s.max_divergence(r.u) <= 1e-10 * s.max_dof(r.u) / m.h_max());
    }
  }
}

TEST_CASE("boundary pressure update") {
  const Mesh m = test1_mesh(0, 1, 4);
  const double psi_bar = 2.5;
  Problem p;
  p.traction = [psi_bar](const Vec2 &, const Vec2 &n, double) { return psi_bar * n; };
  const ProjectionSolver s(m, p, options(1e-2));
  const SolverState st = s.initialize();
  const int nwh = 3 * m.num_triangles();
  const WhVector zero{{std::vector<double>(nwh)}, {std::vector<double>(nwh)}};
  EdgeTrace b = s.update_boundary_pressure(st, zero);
  int neumann = 0;
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.edge(e).kind != BoundaryKind::Neumann) continue;
    ++neumann;
    CHECK(b[e][0] == doctest::Approx(psi_bar).epsilon(1e-14));
    CHECK(b[e][1] == doctest::Approx(psi_bar).epsilon(1e-14));
  }
  CHECK(neumann > 0);

  // A shear u~ = (y, x) has n . grad u~ n = 2 n_x n_y, zero on axis-aligned edges.
  WhVector shear{sample_wh(m, [](const Vec2 &x) { return x.y; }), sample_wh(m, [](const Vec2 &x) { return x.x; })};
  b = s.update_boundary_pressure(st, shear);
  for (int e = 0; e < m.num_edges(); ++e)
    if (m.edge(e).kind == BoundaryKind::Neumann) CHECK(b[e][0] == doctest::Approx(psi_bar).epsilon(1e-13));

  // Stretching u~ = (x, -y): n . grad u~ n = n_x^2 - n_y^2, scaled by nu.
  WhVector stretch{sample_wh(m, [](const Vec2 &x) { return x.x; }), sample_wh(m, [](const Vec2 &x) { return -x.y; })};
  b = s.update_boundary_pressure(st, stretch);
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge &edge = m.edge(e);
    if (edge.kind != BoundaryKind::Neumann) continue;
    const double nn = edge.normal.x * edge.normal.x - edge.normal.y * edge.normal.y;
    CHECK(b[e][1] == doctest::Approx(psi_bar + nn).epsilon(1e-13));
  }
}

TEST_CASE("projection of an admissible field is the identity") {
  const Mesh m = test1_mesh(0, 1, 4);
  Problem p;
  p.velocity = [](const Vec2 &, double) { return Vec2{1.0, 0.0}; };
  const ProjectionSolver s(m, p, options(1e-2));
  const SolverState st = s.initialize();
  const WhVector ut{sample_wh(m, [](const Vec2 &) { return 1.0; }), sample_wh(m, [](const Vec2 &) { return 0.0; })};
  const ProjectionResult r = s.projection_step(st, ut, st.psi_b);
  CHECK(max_abs(r.delta_psi.values) <= 1e-12);
  const VhFunction pi = interpolate_vh(s.space(), [](const Vec2 &) { return Vec2{1.0, 0.0}; });
  for (std::size_t i = 0; i < pi.coeffs.size(); ++i) CHECK(std::abs(r.u.coeffs[i] - pi.coeffs[i]) <= 1e-12);
}

TEST_CASE("pressure gradient update") {
  const Mesh m = test1_mesh(0, 1, 4);
  const double dt = 0.1;
  const ProjectionSolver s(m, Problem{}, options(dt));
  const int nwh = 3 * m.num_triangles();
  const WhVector zero{{std::vector<double>(nwh)}, {std::vector<double>(nwh)}};
  const VhFunction u = interpolate_vh(s.space(), [dt](const Vec2 &) { return Vec2{dt, 0.0}; });
  const WhVector q = s.update_pressure_gradient(zero, u, zero);
  for (int i = 0; i < nwh; ++i) {
    CHECK(q.x.values[i] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(q.y.values[i]) <= 1e-12);
  }
  std::mt19937_64 rng(4);
  const WhVector q0 = random_wh(m, rng);
  const WhVector ut{{std::vector<double>(nwh, dt)}, {std::vector<double>(nwh, 0.0)}};
  const WhVector same = s.update_pressure_gradient(q0, u, ut);
  for (int i = 0; i < nwh; ++i) CHECK(std::abs(same.x.values[i] - q0.x.values[i]) <= 1e-12);
}

TEST_CASE("Test 1 steps keep the discrete invariants") {
  const Mesh m = test1_mesh(0, 1, 4);
  const ProjectionSolver s(m, test1_problem(1.0), options(1e-2));
  SolverState st = s.initialize();
  std::mt19937_64 rng(77);
  for (int n = 0; n < 10; ++n) {
    const WhVector q_old = st.q;
    const StepReport rep = s.advance(st);
    CHECK(rep.max_divergence <= 1e-10 * rep.divergence_scale);

    // q^{n+1} - q^n + (u - u~)/dt = 0 at every W_h node.
    double worst = 0.0;
    for (int t = 0; t < m.num_triangles(); ++t)
      for (int k = 0; k < 3; ++k) {
        const Vec2 u = s.space().node_value(st.u, t, k);
        const Vec2 r = st.q.node(t, k) - q_old.node(t, k) + (1.0 / s.options().dt) * (u - st.u_tilde.node(t, k));
        worst = std::max(worst, norm(r));
      }
    CHECK(worst <= 1e-13 * std::max(1.0, max_abs(st.q.x.values)));

    // Divergence-free RT1 fields are linear on every element.
    for (int t = 0; t < m.num_triangles(); ++t) {
      std::uniform_real_distribution<double> u(0, 1);
      double a = u(rng), b = u(rng);
      if (a + b > 1) a = 1 - a, b = 1 - b;
      const Vec2 x = m.corner(t, 0) + a * (m.corner(t, 1) - m.corner(t, 0)) + b * (m.corner(t, 2) - m.corner(t, 0));
      const auto lam = barycentric(m, t, x);
      Vec2 lin{};
      for (int k = 0; k < 3; ++k) lin += lam[k] * s.space().node_value(st.u, t, k);
      CHECK(norm(s.space().evaluate(st.u, t, x) - lin) <= 1e-11 * std::max(1.0, s.max_dof(st.u)));
    }

    // Essential imposition of the normal velocity on the Dirichlet part.
    for (int e = 0; e < m.num_edges(); ++e) {
      const Edge &edge = m.edge(e);
      if (edge.kind != BoundaryKind::Dirichlet) continue;
      const auto tr = project_trace(m, e, [&](const Vec2 &p) { return dot(exact_test1(p, st.time).u, edge.normal); });
      CHECK(st.u.coeffs[DofMap::edge_dof(e, 0)] == tr[0]);
      CHECK(st.u.coeffs[DofMap::edge_dof(e, 1)] == tr[1]);
    }
  }
}

TEST_CASE("decay run satisfies the energy ledger at every step") {
  const Mesh m = cavity_mesh(8);
  const ProjectionSolver s(m, decay_problem(1.0), options(1e-2));
  SolverState st = s.initialize();
  StabilityLedger ledger = s.start_ledger(st);
  CHECK(ledger.rhs() > 0.0);
  // Kinetic energy alone may grow while it trades with the dt^2 |q|^2 term;
  // their sum may not.
  double prev_energy = ledger.kinetic + ledger.pressure;
  for (int n = 0; n < 50; ++n) {
    s.advance(st, &ledger);
    CHECK(ledger.lhs() <= ledger.rhs());
    const double energy = ledger.kinetic + ledger.pressure;
    CHECK(energy <= prev_energy * (1 + 1e-12));
    prev_energy = energy;
  }
  CHECK(ledger.steps == 50);
  CHECK(ledger.holds());
}

TEST_CASE("linear shear flow is a discrete steady state") {
  // u = (y, 0), psi = 0 solves steady Stokes. Its stress is constant, so the
  // vertex/centroid rule integrates every term of both saddle problems
  // exactly and the scheme should keep it to round-off. The outflow side
  // carries its (zero) traction.
  const BoundaryRule rule = [](const Vec2 &mid, std::array<int, 2>) {
    return mid.x > 1 - 1e-12 ? BoundaryKind::Neumann : BoundaryKind::Dirichlet;
  };
  const Mesh m = perturb_mesh(structured_rectangle(6, 6, {0, 0}, {1, 1}, DiagonalPattern::UnionJack, rule), 0.2, 4);
  Problem p;
  p.u0 = [](const Vec2 &x) { return Vec2{x.y, 0}; };
  p.velocity = [](const Vec2 &x, double) { return Vec2{x.y, 0}; };
  const ProjectionSolver s(m, p, options(1e-2));
  SolverState st = s.initialize();
  const VhFunction u0 = st.u;
  for (int n = 0; n < 5; ++n) s.advance(st);
  double du = 0.0;
  for (std::size_t i = 0; i < u0.coeffs.size(); ++i) du = std::max(du, std::abs(st.u.coeffs[i] - u0.coeffs[i]));
  CHECK(du <= 1e-10);
  CHECK(max_abs(st.psi.values) <= 1e-10);
  CHECK(max_abs(st.q.x.values) <= 1e-8);
}
