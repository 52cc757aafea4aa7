#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rtstokes/fespace.hpp"
#include "rtstokes/mesh.hpp"
#include "rtstokes/solver.hpp"

namespace rtstokes {

// ---------------------------------------------------------------------------
// Manufactured solution on [-0.5, 0.5]^2.

struct FlowValues {
  Vec2 u;
  double psi = 0.0;
};

/// u = (-cos x sin y, sin x cos y) sin^2(2 pi t),
/// psi = (cos 2x + cos 2y) / 4 sin^2(2 pi t). The sign of u_y is the one that
/// makes u solenoidal.
FlowValues exact_test1(const Vec2 &x, double t);
Vec2 exact_test1_grad_psi(const Vec2 &x, double t);
/// Rows of grad u: {grad u_x, grad u_y}.
std::array<Vec2, 2> exact_test1_grad_u(const Vec2 &x, double t);
/// Body force u_t - nu lap u + grad psi that makes the fields above solve
/// the unsteady Stokes equations.
Vec2 test1_forcing(const Vec2 &x, double t, double nu);
/// Normal stress (-nu grad u + psi I) n.
Vec2 test1_traction(const Vec2 &x, const Vec2 &n, double t, double nu);
Problem test1_problem(double nu);

/// Scenario 1: every side is cut at its midpoint, halves alternate between
/// velocity and stress data going around the square. Scenario 2: only the
/// first boundary edge of the bottom side (from the lower-left corner, for
/// the coarsest grid of `base_cells` cells per side) carries stress data.
BoundaryRule test1_boundary(int scenario, int base_cells = 8);
/// Structured grid of base_cells^2 cells cut by uniform diagonals, refined
/// `level` times, optionally perturbed before refinement.
Mesh test1_mesh(int level, int scenario, int base_cells = 8, double perturbation = 0.0, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Errors and rates.

struct FieldErrors {
  double psi = 0.0, ux = 0.0, uy = 0.0;
};

/// L2 errors of a discrete state against exact fields, degree-5 rule.
FieldErrors l2_error(const Rt1Space &space, const VhFunction &u, const WhFunction &psi, const VectorField &exact_u,
                     const ScalarField &exact_psi);
double l2_error(const Mesh &mesh, const WhFunction &w, const ScalarField &exact);

/// Per-step errors and running maxima.
class ErrorHistory {
 public:
  void record(const FieldErrors &e);
  const std::vector<FieldErrors> &steps() const { return steps_; }
  const FieldErrors &max() const { return max_; }

 private:
  std::vector<FieldErrors> steps_;
  FieldErrors max_;
};

/// r_l = log(e_l / e_{l+1}) / log(s_l / s_{l+1}). Returns one rate fewer
/// than there are levels (none for a single level). An undefined rate
/// (nonpositive error) is NaN. Throws InvalidArgument on mismatched sizes
/// or nonpositive / repeated step sizes.
std::vector<double> convergence_rate(std::span<const double> errors, std::span<const double> sizes);

struct ConvergenceTable {
  std::string parameter = "h";  ///< "h" or "dt"
  std::vector<int> levels;
  std::vector<double> sizes;
  std::vector<FieldErrors> errors;
  std::vector<FieldErrors> rates;  ///< rates[i] relates rows i and i + 1

  void add(int level, double size, const FieldErrors &e);
  void compute_rates();
  /// True when some rate is NaN.
  bool has_undefined_rate() const;
  /// Columns: level, size, L2_psi, L2_ux, L2_uy, r_psi, r_ux, r_uy.
  void write_csv(std::ostream &out) const;
};

// ---------------------------------------------------------------------------
// Experiment drivers.

/// Per-run bookkeeping collected while stepping.
struct RunDiagnostics {
  int steps = 0;
  double max_divergence_ratio = 0.0;  ///< max over steps of max|div u| / (max|u DOF| / h)
  double max_q_orthogonality = 0.0;
  int max_iterations = 0;
  double seconds = 0.0;
};

enum class StudyMode { Space, Time };

struct Test1Config {
  int scenario = 1;
  StudyMode mode = StudyMode::Space;
  int base_cells = 8;
  std::vector<int> levels{0, 1, 2};    ///< space mode
  int time_level = 3;                  ///< time mode
  double dt = 1e-4;                    ///< space mode
  std::vector<double> dts{1e-1, 1e-2, 1e-3};  ///< time mode
  double t_final = 0.1;
  double nu = 1.0;
  double perturbation = 0.0;
  std::uint64_t seed = 1;
  SolverOptions solver;
  /// Called after every finished run with its row index.
  std::function<void(int, const FieldErrors &, const RunDiagnostics &)> on_run;
};

struct Test1Result {
  ConvergenceTable table;
  std::vector<RunDiagnostics> runs;
};

/// One Test 1 run on a given mesh; returns the max-over-steps errors.
FieldErrors run_test1_once(const Mesh &mesh, double nu, double dt, double t_final, const SolverOptions &options,
                           RunDiagnostics *diag = nullptr, ErrorHistory *history = nullptr);
Test1Result run_test1(const Test1Config &config);

struct CavityConfig {
  double lid_velocity = 1.0;
  /// Bottom wall velocity s in {+u0, 0, -u0}.
  double bottom_velocity = 0.0;
  int cells = 16;  ///< even, so the union-jack grid is mirror symmetric in y
  double dt = 1e-2;
  double t_final = 2.0;
  double nu = 1.0;
  int samples = 33;
  SolverOptions solver;
};

struct ProfileSample {
  double coord = 0.0;
  double ux = 0.0, uy = 0.0, psi = 0.0;
};

struct CavityResult {
  Mesh mesh;
  SolverState state;
  std::vector<ProfileSample> vertical;    ///< along x = 1/2, coord = y
  std::vector<ProfileSample> horizontal;  ///< along y = 1/2, coord = x
  /// max over midline samples of |u_x(x, y) + m u_x(x, 1 - y)|, m = -sign(s),
  /// i.e. the reflection identity expected for the chosen bottom velocity.
  double symmetry_error = 0.0;
  double net_boundary_flux = 0.0;
  double lid_datum = 0.0;          ///< boundary data u_x at the lid midpoint
  double lid_computed = 0.0;       ///< u_h . t at the lid midpoint
  double final_change = 0.0;       ///< max |u^{N} - u^{N-1}| over DOFs
  RunDiagnostics diagnostics;
};

Mesh cavity_mesh(int cells);
Problem cavity_problem(double lid, double bottom, double nu);
CavityResult run_cavity(const CavityConfig &config);
void write_profiles_csv(const CavityResult &result, std::ostream &out);

/// Average of a P1 field over the elements containing p.
FlowValues sample_flow(const Rt1Space &space, const VhFunction &u, const WhFunction &psi, const Vec2 &p);

struct DecayConfig {
  int cells = 8;
  double dt = 1e-2;
  int steps = 500;
  double nu = 1.0;
  SolverOptions solver;
};

struct DecayResult {
  StabilityLedger ledger;
  int violations_exact = 0;  ///< steps where the exact-norm variant exceeds the bound
  RunDiagnostics diagnostics;
};

/// Homogeneous velocity data on the unit square, starting from the
/// discrete projection of curl (x(1-x)y(1-y))^2.
Problem decay_problem(double nu);
DecayResult run_decay(const DecayConfig &config);

}  // namespace rtstokes
