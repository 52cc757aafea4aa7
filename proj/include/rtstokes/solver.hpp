#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "rtstokes/assembly.hpp"
#include "rtstokes/fespace.hpp"
#include "rtstokes/mesh.hpp"
#include "rtstokes/sparse.hpp"

namespace rtstokes {

using TimeScalarField = std::function<double(const Vec2 &, double)>;
using TimeVectorField = std::function<Vec2(const Vec2 &, double)>;
/// Normal stress vector on a Neumann edge, given the point, the outward
/// unit normal and the time.
using TractionField = std::function<Vec2(const Vec2 &, const Vec2 &, double)>;

/// Data of one unsteady Stokes problem. Empty callables mean zero.
struct Problem {
  double nu = 1.0;
  VectorField u0;
  ScalarField psi0;
  VectorField grad_psi0;
  TimeVectorField velocity;  ///< prescribed velocity on Dirichlet edges
  TractionField traction;    ///< prescribed normal stress on Neumann edges
  TimeVectorField forcing;   ///< body force
  /// Replace the interpolated initial velocity by its discrete projection
  /// onto divergence-free fields (one extra projection solve).
  bool project_initial = false;
};

struct SolverOptions {
  double dt = 1e-3;
  PcgOptions predictor{1e-10, 0};
  /// Tighter default: the divergence of u_h is the residual of this solve.
  PcgOptions projection{1e-13, 0};
  /// Pressure pin used only when the mesh has no Neumann edge: the W_h node
  /// nearest to this point gets a zero pressure increment.
  Vec2 pin_point{-1e300, -1e300};
  /// Run the two predictor components on separate threads.
  bool concurrent_components = true;
};

/// Linear trace of the boundary pressure on each edge (values at e.v[0]
/// and e.v[1]); meaningful on Neumann edges only.
using EdgeTrace = std::vector<std::array<double, 2>>;

struct SolverState {
  int step = 0;
  double time = 0.0;
  VhFunction u;      ///< divergence-free velocity
  WhFunction psi;    ///< kinematic pressure
  WhVector q;        ///< pressure gradient
  EdgeTrace psi_b;   ///< boundary pressure on Neumann edges
  // Quantities of the last step, kept for diagnostics and warm starts.
  WhVector u_tilde;
  VhFunction sigma_x, sigma_y;
  WhFunction delta_psi;
};

struct PredictorResult {
  VhFunction sigma_x, sigma_y;
  WhVector u_tilde;
  std::array<PcgResult, 2> solves{};
};

struct ProjectionResult {
  VhFunction u;
  WhFunction psi;
  WhFunction delta_psi;
  PcgResult solve;
};

struct StepReport {
  int step = 0;
  double time = 0.0;
  std::array<PcgResult, 3> solves{};  ///< predictor x, predictor y, projection
  double max_divergence = 0.0;        ///< over the three edge midpoints of every element
  double divergence_scale = 0.0;      ///< max |u DOF| / h
  /// |(q^{n+1}, u^{n+1})| / (|q^{n+1}| |u^{n+1}|); zero under exact integration.
  double q_orthogonality = 0.0;
};

/// Energy bookkeeping of the discrete stability estimate. All terms are
/// cumulative up to the current step N:
///   dt sum nu^{-1} |sigma|^2 + |u^N|^2 / 2 + sum |u - u~|^2 / 2 + dt^2 |q^N|^2 / 2
///     <= |u^0|^2 / 2 + dt^2 |q^0|^2 / 2.
/// The stress norm uses the quadrature inner product the method is built on;
/// `dissipation_exact` carries the same sum in the exact L2 norm.
struct StabilityLedger {
  double initial = 0.0;
  double dissipation = 0.0;
  double dissipation_exact = 0.0;
  double kinetic = 0.0;
  double splitting = 0.0;
  double pressure = 0.0;
  int steps = 0;
  int violations = 0;
  double worst_margin = 0.0;  ///< max over steps of (lhs - rhs) / rhs

  double lhs() const { return dissipation + kinetic + splitting + pressure; }
  double lhs_exact() const { return dissipation_exact + kinetic + splitting + pressure; }
  double rhs() const { return initial; }
  bool holds() const { return violations == 0; }
};

/// Incremental pressure-correction scheme on a fixed mesh. Both reduced
/// operators and their preconditioners are built once in the constructor.
class ProjectionSolver {
 public:
  ProjectionSolver(const Mesh &mesh, Problem problem, SolverOptions options);
  ~ProjectionSolver();
  ProjectionSolver(const ProjectionSolver &) = delete;
  ProjectionSolver &operator=(const ProjectionSolver &) = delete;

  const Mesh &mesh() const { return *mesh_; }
  const Rt1Space &space() const { return space_; }
  const Problem &problem() const { return problem_; }
  const SolverOptions &options() const { return options_; }
  const SchurOperator &predictor_operator() const { return predictor_; }
  const SchurOperator &projection_operator() const { return projection_; }
  /// W_h DOF pinned in the projection operator, -1 when none.
  int pinned_dof() const { return projection_.pinned(); }

  SolverState initialize() const;
  PredictorResult predictor_step(const SolverState &state) const;
  EdgeTrace update_boundary_pressure(const SolverState &state, const WhVector &u_tilde) const;
  ProjectionResult projection_step(const SolverState &state, const WhVector &u_tilde,
                                   const EdgeTrace &psi_b_next) const;
  WhVector update_pressure_gradient(const WhVector &q, const VhFunction &u, const WhVector &u_tilde) const;

  /// One full step; updates `ledger` when given.
  StepReport advance(SolverState &state, StabilityLedger *ledger = nullptr) const;

  /// Starts a ledger from the initial state.
  StabilityLedger start_ledger(const SolverState &state) const;

  /// Largest |div u| over the three edge midpoints of every element.
  double max_divergence(const VhFunction &u) const;
  double max_dof(const VhFunction &u) const;

  /// ||u||^2 with the degree-5 rule, and the quadrature norm ||sigma||_Q^2.
  double norm2_exact(const VhFunction &v) const;
  double norm2_q(const VhFunction &v) const;

 private:
  std::vector<double> predictor_rhs(const SolverState &state, int c) const;
  std::vector<double> projection_rhs_g(const SolverState &state, const WhVector &u_tilde,
                                       const EdgeTrace &psi_b_next) const;
  std::vector<double> dirichlet_velocity_values(double t) const;

  const Mesh *mesh_;
  Problem problem_;
  SolverOptions options_;
  Rt1Space space_;
  CsrMatrix mass_;
  std::vector<ElementGram> gram_;
  SchurOperator predictor_;
  SchurOperator projection_;
  IcPreconditioner predictor_pc_;
  IcPreconditioner projection_pc_;
  bool has_neumann_ = false;
};

/// Squared L2 norms of discrete fields with the degree-5 rule.
double field_norm2(const Mesh &mesh, const WhFunction &w);
double field_norm2(const Mesh &mesh, const WhVector &w);

}  // namespace rtstokes
