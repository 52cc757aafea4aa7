#include "rtstokes/rtstokes.h"

#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "rtstokes/error.hpp"
#include "rtstokes/mesh.hpp"
#include "rtstokes/solver.hpp"
#include "rtstokes/verification.hpp"
#include "rtstokes/vtk.hpp"

struct rts_mesh {
  rtstokes::Mesh mesh;
};

struct rts_table {
  rtstokes::Test1Result result;
};

struct rts_cavity {
  rtstokes::CavityResult result;
};

struct rts_solver {
  rtstokes::Mesh mesh;
  int kind = 0;
  std::unique_ptr<rtstokes::ProjectionSolver> solver;
  rtstokes::SolverState state;
  rtstokes::StabilityLedger ledger;
};

namespace {

thread_local std::string g_last_error;

template <class F>
rts_status guarded(F &&f) {
  try {
    g_last_error.clear();
    f();
    return RTS_OK;
  } catch (const rtstokes::InvalidArgument &e) {
    g_last_error = e.what();
    return RTS_ERR_INVALID_ARGUMENT;
  } catch (const rtstokes::MeshError &e) {
    g_last_error = e.what();
    return RTS_ERR_MESH;
  } catch (const rtstokes::SolverError &e) {
    g_last_error = e.what();
    return RTS_ERR_SOLVER;
  } catch (const rtstokes::IoError &e) {
    g_last_error = e.what();
    return RTS_ERR_IO;
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return RTS_ERR_INTERNAL;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return RTS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RTS_ERR_INTERNAL;
  }
}

void require(bool ok, const char *what) {
  if (!ok) throw rtstokes::InvalidArgument(what);
}

rtstokes::SolverOptions to_options(const rts_solver_options *o) {
  rts_solver_options d;
  rts_solver_options_default(&d);
  if (!o) o = &d;
  rtstokes::SolverOptions s;
  s.dt = o->dt;
  s.predictor = {o->predictor_tol, o->max_iter};
  s.projection = {o->projection_tol, o->max_iter};
  s.concurrent_components = o->concurrent != 0;
  require(s.dt > 0.0, "time step must be positive");
  require(o->predictor_tol > 0.0 && o->projection_tol > 0.0, "solver tolerances must be positive");
  require(o->max_iter >= 0, "max_iter must be nonnegative");
  return s;
}

rts_errors to_c(const rtstokes::FieldErrors &e) { return {e.psi, e.ux, e.uy}; }

rts_run_diagnostics to_c(const rtstokes::RunDiagnostics &d) {
  return {d.steps, d.max_divergence_ratio, d.max_q_orthogonality, d.max_iterations, d.seconds};
}

rtstokes::BoundaryKind to_kind(int boundary) {
  if (boundary == RTS_BOUNDARY_DIRICHLET) return rtstokes::BoundaryKind::Dirichlet;
  if (boundary == RTS_BOUNDARY_NEUMANN) return rtstokes::BoundaryKind::Neumann;
  throw rtstokes::InvalidArgument("boundary marker must be RTS_BOUNDARY_DIRICHLET or RTS_BOUNDARY_NEUMANN");
}

}  // namespace

extern "C" {

const char *rts_version(void) { return "0.1.0"; }

const char *rts_status_string(rts_status status) {
  switch (status) {
    case RTS_OK: return "ok";
    case RTS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RTS_ERR_MESH: return "mesh error";
    case RTS_ERR_SOLVER: return "solver error";
    case RTS_ERR_IO: return "i/o error";
    case RTS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char *rts_last_error_message(void) { return g_last_error.c_str(); }

rts_status rts_mesh_read(const char *path, rts_mesh **out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new rts_mesh{rtstokes::read_mesh_file(path)};
  });
}

rts_status rts_mesh_write(const rts_mesh *mesh, const char *path) {
  return guarded([&] {
    require(mesh && path, "null argument");
    rtstokes::write_mesh_file(mesh->mesh, path);
  });
}

rts_status rts_mesh_structured(int nx, int ny, double x0, double y0, double x1, double y1, int pattern, int boundary,
                               rts_mesh **out) {
  return guarded([&] {
    require(out, "null argument");
    *out = nullptr;
    require(pattern == RTS_DIAGONAL_UNIFORM || pattern == RTS_DIAGONAL_UNION_JACK, "unknown diagonal pattern");
    const rtstokes::BoundaryKind kind = to_kind(boundary);
    const auto pat =
        pattern == RTS_DIAGONAL_UNIFORM ? rtstokes::DiagonalPattern::Uniform : rtstokes::DiagonalPattern::UnionJack;
    *out = new rts_mesh{rtstokes::structured_rectangle(nx, ny, {x0, y0}, {x1, y1}, pat,
                                                       [kind](const rtstokes::Vec2 &, std::array<int, 2>) { return kind; })};
  });
}

rts_status rts_mesh_test1(int level, int scenario, int base_cells, double perturbation, uint64_t seed,
                          rts_mesh **out) {
  return guarded([&] {
    require(out, "null argument");
    *out = nullptr;
    *out = new rts_mesh{rtstokes::test1_mesh(level, scenario, base_cells, perturbation, seed)};
  });
}

rts_status rts_mesh_refine(const rts_mesh *mesh, rts_mesh **out) {
  return guarded([&] {
    require(mesh && out, "null argument");
    *out = nullptr;
    *out = new rts_mesh{rtstokes::uniform_refine(mesh->mesh)};
  });
}

rts_status rts_mesh_perturb(const rts_mesh *mesh, double magnitude, uint64_t seed, rts_mesh **out) {
  return guarded([&] {
    require(mesh && out, "null argument");
    *out = nullptr;
    *out = new rts_mesh{rtstokes::perturb_mesh(mesh->mesh, magnitude, seed)};
  });
}

rts_status rts_mesh_stats_get(const rts_mesh *mesh, rts_mesh_stats *out) {
  return guarded([&] {
    require(mesh && out, "null argument");
    const rtstokes::MeshStatistics s = rtstokes::mesh_statistics(mesh->mesh);
    out->num_triangles = s.num_triangles;
    out->num_vertices = s.num_vertices;
    out->num_edges = s.num_edges;
    out->num_boundary_edges = s.num_boundary_edges;
    out->h_max = s.h_max;
    out->min_aspect_ratio = s.min_aspect_ratio;
    out->max_aspect_ratio = s.max_aspect_ratio;
    for (int i = 0; i < RTS_ASPECT_BINS; ++i) out->aspect_histogram[i] = s.aspect_histogram[i];
  });
}

rts_status rts_mesh_write_statistics_csv(const rts_mesh *mesh, const char *path) {
  return guarded([&] {
    require(mesh && path, "null argument");
    std::ofstream f(path);
    if (!f) throw rtstokes::IoError(std::string("cannot open ") + path + " for writing");
    rtstokes::write_statistics_csv(rtstokes::mesh_statistics(mesh->mesh), f);
  });
}

void rts_mesh_free(rts_mesh *mesh) { delete mesh; }

void rts_solver_options_default(rts_solver_options *options) {
  if (!options) return;
  const rtstokes::SolverOptions d;
  options->dt = d.dt;
  options->predictor_tol = d.predictor.rel_tol;
  options->projection_tol = d.projection.rel_tol;
  options->max_iter = 0;
  options->concurrent = d.concurrent_components ? 1 : 0;
}

rts_status rts_convergence_run(const rts_convergence_config *config, const rts_solver_options *options,
                               rts_table **out) {
  return guarded([&] {
    require(config && out, "null argument");
    *out = nullptr;
    rtstokes::Test1Config c;
    c.scenario = config->scenario;
    require(config->mode == RTS_STUDY_SPACE || config->mode == RTS_STUDY_TIME, "unknown study mode");
    c.mode = config->mode == RTS_STUDY_SPACE ? rtstokes::StudyMode::Space : rtstokes::StudyMode::Time;
    c.base_cells = config->base_cells;
    require(c.base_cells >= 2, "base_cells must be at least 2");
    if (c.mode == rtstokes::StudyMode::Space) {
      require(config->levels && config->num_levels > 0, "space study needs levels");
      c.levels.assign(config->levels, config->levels + config->num_levels);
    } else {
      require(config->dts && config->num_dts > 0, "time study needs time steps");
      c.dts.assign(config->dts, config->dts + config->num_dts);
    }
    c.time_level = config->time_level;
    c.dt = config->dt;
    c.t_final = config->t_final;
    c.nu = config->nu;
    require(c.nu > 0.0, "viscosity must be positive");
    c.perturbation = config->perturbation;
    c.seed = config->seed;
    c.solver = to_options(options);
    auto table = std::make_unique<rts_table>();
    table->result = rtstokes::run_test1(c);
    *out = table.release();
  });
}

int rts_table_rows(const rts_table *table) {
  return table ? static_cast<int>(table->result.table.errors.size()) : 0;
}

rts_status rts_table_row(const rts_table *table, int row, int *level, double *size, rts_errors *errors,
                         rts_run_diagnostics *diagnostics) {
  return guarded([&] {
    require(table, "null argument");
    const auto &t = table->result.table;
    require(row >= 0 && row < static_cast<int>(t.errors.size()), "row out of range");
    if (level) *level = t.levels[row];
    if (size) *size = t.sizes[row];
    if (errors) *errors = to_c(t.errors[row]);
    if (diagnostics) *diagnostics = to_c(table->result.runs[row]);
  });
}

rts_status rts_table_rate(const rts_table *table, int row, rts_errors *rates) {
  return guarded([&] {
    require(table && rates, "null argument");
    const auto &t = table->result.table;
    require(row >= 0 && row < static_cast<int>(t.rates.size()), "rate row out of range");
    *rates = to_c(t.rates[row]);
  });
}

rts_status rts_table_write_csv(const rts_table *table, const char *path) {
  return guarded([&] {
    require(table && path, "null argument");
    std::ofstream f(path);
    if (!f) throw rtstokes::IoError(std::string("cannot open ") + path + " for writing");
    table->result.table.write_csv(f);
  });
}

void rts_table_free(rts_table *table) { delete table; }

rts_status rts_convergence_rates(const double *errors, const double *sizes, int n, double *rates) {
  return guarded([&] {
    require(errors && sizes && n >= 0 && (rates || n < 2), "null argument");
    const auto r = rtstokes::convergence_rate({errors, static_cast<std::size_t>(n)}, {sizes, static_cast<std::size_t>(n)});
    for (std::size_t i = 0; i < r.size(); ++i) rates[i] = r[i];
  });
}

rts_status rts_cavity_run(const rts_cavity_config *config, const rts_solver_options *options, rts_cavity **out) {
  return guarded([&] {
    require(config && out, "null argument");
    *out = nullptr;
    rtstokes::CavityConfig c;
    c.lid_velocity = config->lid_velocity;
    c.bottom_velocity = config->bottom_velocity;
    c.cells = config->cells;
    c.t_final = config->t_final;
    c.nu = config->nu;
    c.samples = config->samples;
    c.solver = to_options(options);
    c.dt = c.solver.dt;
    require(c.nu > 0.0, "viscosity must be positive");
    auto cav = std::make_unique<rts_cavity>();
    cav->result = rtstokes::run_cavity(c);
    *out = cav.release();
  });
}

rts_status rts_cavity_summary_get(const rts_cavity *cavity, rts_cavity_summary *out) {
  return guarded([&] {
    require(cavity && out, "null argument");
    const auto &r = cavity->result;
    out->symmetry_error = r.symmetry_error;
    out->net_boundary_flux = r.net_boundary_flux;
    out->lid_datum = r.lid_datum;
    out->lid_computed = r.lid_computed;
    out->final_change = r.final_change;
    out->diagnostics = to_c(r.diagnostics);
  });
}

rts_status rts_cavity_write_profiles(const rts_cavity *cavity, const char *path) {
  return guarded([&] {
    require(cavity && path, "null argument");
    std::ofstream f(path);
    if (!f) throw rtstokes::IoError(std::string("cannot open ") + path + " for writing");
    rtstokes::write_profiles_csv(cavity->result, f);
  });
}

rts_status rts_cavity_write_vtk(const rts_cavity *cavity, const char *path) {
  return guarded([&] {
    require(cavity && path, "null argument");
    const rtstokes::Rt1Space space(cavity->result.mesh);
    const auto &s = cavity->result.state;
    rtstokes::write_vtk_file(path, space, s.u, s.psi, s.q, "lid-driven cavity t=" + std::to_string(s.time));
  });
}

void rts_cavity_free(rts_cavity *cavity) { delete cavity; }

rts_status rts_solver_create(const rts_mesh *mesh, const rts_problem_params *problem,
                             const rts_solver_options *options, rts_solver **out) {
  return guarded([&] {
    require(mesh && problem && out, "null argument");
    *out = nullptr;
    require(problem->nu > 0.0, "viscosity must be positive");
    auto s = std::make_unique<rts_solver>();
    s->mesh = mesh->mesh;
    s->kind = problem->kind;
    rtstokes::Problem p;
    rtstokes::SolverOptions opt = to_options(options);
    switch (problem->kind) {
      case RTS_PROBLEM_TEST1:
        p = rtstokes::test1_problem(problem->nu);
        break;
      case RTS_PROBLEM_CAVITY:
        p = rtstokes::cavity_problem(problem->lid_velocity, problem->bottom_velocity, problem->nu);
        break;
      case RTS_PROBLEM_DECAY:
        p = rtstokes::decay_problem(problem->nu);
        break;
      default:
        throw rtstokes::InvalidArgument("unknown problem kind");
    }
    s->solver = std::make_unique<rtstokes::ProjectionSolver>(s->mesh, std::move(p), opt);
    s->state = s->solver->initialize();
    s->ledger = s->solver->start_ledger(s->state);
    *out = s.release();
  });
}

rts_status rts_solver_step(rts_solver *solver, rts_step_info *info) {
  return guarded([&] {
    require(solver, "null argument");
    const rtstokes::StepReport r = solver->solver->advance(solver->state, &solver->ledger);
    if (info) {
      info->step = r.step;
      info->time = r.time;
      for (int i = 0; i < 3; ++i) info->iterations[i] = r.solves[i].iterations;
      info->max_divergence = r.max_divergence;
      info->divergence_scale = r.divergence_scale;
    }
  });
}

double rts_solver_time(const rts_solver *solver) { return solver ? solver->state.time : std::nan(""); }

rts_status rts_solver_errors(const rts_solver *solver, rts_errors *out) {
  return guarded([&] {
    require(solver && out, "null argument");
    require(solver->kind == RTS_PROBLEM_TEST1, "errors are available for the manufactured solution only");
    const double t = solver->state.time;
    *out = to_c(rtstokes::l2_error(
        solver->solver->space(), solver->state.u, solver->state.psi,
        [t](const rtstokes::Vec2 &x) { return rtstokes::exact_test1(x, t).u; },
        [t](const rtstokes::Vec2 &x) { return rtstokes::exact_test1(x, t).psi; }));
  });
}

rts_status rts_solver_ledger(const rts_solver *solver, rts_ledger *out) {
  return guarded([&] {
    require(solver && out, "null argument");
    out->lhs = solver->ledger.lhs();
    out->rhs = solver->ledger.rhs();
    out->lhs_exact = solver->ledger.lhs_exact();
    out->violations = solver->ledger.violations;
  });
}

rts_status rts_solver_write_vtk(const rts_solver *solver, const char *path) {
  return guarded([&] {
    require(solver && path, "null argument");
    const auto &s = solver->state;
    rtstokes::write_vtk_file(path, solver->solver->space(), s.u, s.psi, s.q, "rtstokes t=" + std::to_string(s.time));
  });
}

void rts_solver_free(rts_solver *solver) { delete solver; }

}  // extern "C"
