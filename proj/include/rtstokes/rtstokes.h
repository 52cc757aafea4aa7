/* C interface of the rtstokes solver library.
 *
 * Every function returns an rts_status; on failure the message of the last
 * error on the calling thread is available from rts_last_error_message().
 * Objects are opaque and owned by the caller, who releases them with the
 * matching *_free function (NULL is accepted).
 */
#ifndef RTSTOKES_H
#define RTSTOKES_H

#include <stddef.h>
#include <stdint.h>

#if defined(RTS_BUILDING_LIBRARY)
#define RTS_API __attribute__((visibility("default")))
#else
#define RTS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rts_status {
  RTS_OK = 0,
  RTS_ERR_INVALID_ARGUMENT = 1,
  RTS_ERR_MESH = 2,
  RTS_ERR_SOLVER = 3,
  RTS_ERR_IO = 4,
  RTS_ERR_INTERNAL = 5
} rts_status;

RTS_API const char *rts_version(void);
RTS_API const char *rts_status_string(rts_status status);
/* Empty string when the last call on this thread succeeded. */
RTS_API const char *rts_last_error_message(void);

/* ---- meshes ------------------------------------------------------------ */

typedef struct rts_mesh rts_mesh;

enum { RTS_BOUNDARY_DIRICHLET = 1, RTS_BOUNDARY_NEUMANN = 2 };
enum { RTS_DIAGONAL_UNIFORM = 0, RTS_DIAGONAL_UNION_JACK = 1 };
enum { RTS_ASPECT_BINS = 19 };

typedef struct rts_mesh_stats {
  int num_triangles;
  int num_vertices;
  int num_edges;
  int num_boundary_edges;
  double h_max;
  double min_aspect_ratio;
  double max_aspect_ratio;
  int aspect_histogram[RTS_ASPECT_BINS];
} rts_mesh_stats;

RTS_API rts_status rts_mesh_read(const char *path, rts_mesh **out);
RTS_API rts_status rts_mesh_write(const rts_mesh *mesh, const char *path);
/* nx * ny cells over [x0, x1] x [y0, y1]; every boundary edge gets `boundary`. */
RTS_API rts_status rts_mesh_structured(int nx, int ny, double x0, double y0, double x1, double y1, int pattern,
                                       int boundary, rts_mesh **out);
/* Convergence-study grid on [-0.5, 0.5]^2 with the markers of `scenario` (1 or 2). */
RTS_API rts_status rts_mesh_test1(int level, int scenario, int base_cells, double perturbation, uint64_t seed,
                                  rts_mesh **out);
RTS_API rts_status rts_mesh_refine(const rts_mesh *mesh, rts_mesh **out);
RTS_API rts_status rts_mesh_perturb(const rts_mesh *mesh, double magnitude, uint64_t seed, rts_mesh **out);
RTS_API rts_status rts_mesh_stats_get(const rts_mesh *mesh, rts_mesh_stats *out);
RTS_API rts_status rts_mesh_write_statistics_csv(const rts_mesh *mesh, const char *path);
RTS_API void rts_mesh_free(rts_mesh *mesh);

/* ---- solver options ------------------------------------------------------ */

typedef struct rts_solver_options {
  double dt;
  double predictor_tol;  /* relative PCG tolerance */
  double projection_tol;
  int max_iter;          /* 0: ten times the system size */
  int concurrent;        /* nonzero: predictor components on two threads */
} rts_solver_options;

RTS_API void rts_solver_options_default(rts_solver_options *options);

typedef struct rts_errors {
  double psi, ux, uy;
} rts_errors;

typedef struct rts_run_diagnostics {
  int steps;
  double max_divergence_ratio; /* max |div u| / (max |u DOF| / h) */
  double max_q_orthogonality;
  int max_iterations;
  double seconds;
} rts_run_diagnostics;

/* ---- convergence studies -------------------------------------------------- */

typedef struct rts_table rts_table;

enum { RTS_STUDY_SPACE = 0, RTS_STUDY_TIME = 1 };

typedef struct rts_convergence_config {
  int scenario;
  int mode;
  int base_cells;
  const int *levels; /* space mode */
  int num_levels;
  int time_level;    /* time mode */
  double dt;         /* space mode */
  const double *dts; /* time mode */
  int num_dts;
  double t_final;
  double nu;
  double perturbation;
  uint64_t seed;
} rts_convergence_config;

RTS_API rts_status rts_convergence_run(const rts_convergence_config *config, const rts_solver_options *options,
                                       rts_table **out);
RTS_API int rts_table_rows(const rts_table *table);
RTS_API rts_status rts_table_row(const rts_table *table, int row, int *level, double *size, rts_errors *errors,
                                 rts_run_diagnostics *diagnostics);
/* Rate between rows `row` and `row + 1`; NaN entries mark undefined rates. */
RTS_API rts_status rts_table_rate(const rts_table *table, int row, rts_errors *rates);
RTS_API rts_status rts_table_write_csv(const rts_table *table, const char *path);
RTS_API void rts_table_free(rts_table *table);

/* Rates for raw error columns (pure arithmetic). `rates` holds n - 1 values. */
RTS_API rts_status rts_convergence_rates(const double *errors, const double *sizes, int n, double *rates);

/* ---- lid-driven cavity ---------------------------------------------------- */

typedef struct rts_cavity rts_cavity;

typedef struct rts_cavity_config {
  double lid_velocity;
  double bottom_velocity;
  int cells;
  double t_final;
  double nu;
  int samples;
} rts_cavity_config;

typedef struct rts_cavity_summary {
  double symmetry_error;
  double net_boundary_flux;
  double lid_datum;
  double lid_computed;
  double final_change;
  rts_run_diagnostics diagnostics;
} rts_cavity_summary;

RTS_API rts_status rts_cavity_run(const rts_cavity_config *config, const rts_solver_options *options,
                                  rts_cavity **out);
RTS_API rts_status rts_cavity_summary_get(const rts_cavity *cavity, rts_cavity_summary *out);
RTS_API rts_status rts_cavity_write_profiles(const rts_cavity *cavity, const char *path);
RTS_API rts_status rts_cavity_write_vtk(const rts_cavity *cavity, const char *path);
RTS_API void rts_cavity_free(rts_cavity *cavity);

/* ---- step-by-step runs on any mesh ---------------------------------------- */

typedef struct rts_solver rts_solver;

enum {
  RTS_PROBLEM_TEST1 = 0,  /* manufactured solution, needs the [-0.5, 0.5]^2 square */
  RTS_PROBLEM_CAVITY = 1, /* lid-driven cavity, unit square */
  RTS_PROBLEM_DECAY = 2   /* free decay with zero wall velocity, unit square */
};

typedef struct rts_problem_params {
  int kind;
  double nu;
  double lid_velocity;    /* cavity */
  double bottom_velocity; /* cavity */
} rts_problem_params;

typedef struct rts_step_info {
  int step;
  double time;
  int iterations[3]; /* predictor x, predictor y, projection */
  double max_divergence;
  double divergence_scale;
} rts_step_info;

typedef struct rts_ledger {
  double lhs;
  double rhs;
  double lhs_exact;
  int violations;
} rts_ledger;

/* The solver keeps its own copy of the mesh. */
RTS_API rts_status rts_solver_create(const rts_mesh *mesh, const rts_problem_params *problem,
                                     const rts_solver_options *options, rts_solver **out);
RTS_API rts_status rts_solver_step(rts_solver *solver, rts_step_info *info);
RTS_API double rts_solver_time(const rts_solver *solver);
/* L2 errors against the manufactured solution (RTS_PROBLEM_TEST1 only). */
RTS_API rts_status rts_solver_errors(const rts_solver *solver, rts_errors *out);
RTS_API rts_status rts_solver_ledger(const rts_solver *solver, rts_ledger *out);
RTS_API rts_status rts_solver_write_vtk(const rts_solver *solver, const char *path);
RTS_API void rts_solver_free(rts_solver *solver);

#ifdef __cplusplus
}
#endif

#endif /* RTSTOKES_H */
