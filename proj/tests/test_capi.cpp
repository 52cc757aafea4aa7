#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "rtstokes/rtstokes.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const char *name) {
  const fs::path p = fs::temp_directory_path() / "rts_capi" / name;
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strcmp(rts_version(), "0.1.0") == 0);
  CHECK(std::string(rts_status_string(RTS_OK)) != "");
  CHECK(std::string(rts_status_string(RTS_ERR_MESH)) != std::string(rts_status_string(RTS_ERR_IO)));
}

TEST_CASE("mesh handles") {
  rts_mesh *m = nullptr;
  REQUIRE(rts_mesh_structured(2, 2, 0, 0, 1, 1, RTS_DIAGONAL_UNIFORM, RTS_BOUNDARY_DIRICHLET, &m) == RTS_OK);
  CHECK(std::string(rts_last_error_message()).empty());
  rts_mesh_stats s{};
  REQUIRE(rts_mesh_stats_get(m, &s) == RTS_OK);
  CHECK(s.num_triangles == 8);
  CHECK(s.num_edges == 16);
  CHECK(s.num_boundary_edges == 8);

  rts_mesh *r = nullptr;
  REQUIRE(rts_mesh_refine(m, &r) == RTS_OK);
  rts_mesh_stats rs{};
  rts_mesh_stats_get(r, &rs);
  CHECK(rs.num_triangles == 32);
  for (int b = 0; b < RTS_ASPECT_BINS; ++b) CHECK(rs.aspect_histogram[b] == 4 * s.aspect_histogram[b]);

  const fs::path path = scratch("mesh.txt");
  REQUIRE(rts_mesh_write(r, path.c_str()) == RTS_OK);
  rts_mesh *back = nullptr;
  REQUIRE(rts_mesh_read(path.c_str(), &back) == RTS_OK);
  rts_mesh_stats bs{};
  rts_mesh_stats_get(back, &bs);
  CHECK(bs.num_triangles == 32);

  const fs::path csv = scratch("stats.csv");
  REQUIRE(rts_mesh_write_statistics_csv(back, csv.c_str()) == RTS_OK);
  CHECK(slurp(csv).rfind("quantity,value", 0) == 0);

  rts_mesh *p = nullptr;
  REQUIRE(rts_mesh_perturb(r, 0.2, 5, &p) == RTS_OK);
  rts_mesh_stats ps{};
  rts_mesh_stats_get(p, &ps);
  CHECK(ps.min_aspect_ratio < rs.min_aspect_ratio);

  rts_mesh_free(p);
  rts_mesh_free(back);
  rts_mesh_free(r);
  rts_mesh_free(m);
  rts_mesh_free(nullptr);
}

TEST_CASE("errors map onto status codes") {
  rts_mesh *m = nullptr;
  CHECK(rts_mesh_read("/does/not/exist", &m) == RTS_ERR_IO);
  CHECK(m == nullptr);
  CHECK(std::string(rts_last_error_message()).find("cannot open") != std::string::npos);
  CHECK(rts_mesh_structured(0, 2, 0, 0, 1, 1, 0, RTS_BOUNDARY_DIRICHLET, &m) == RTS_ERR_INVALID_ARGUMENT);
  CHECK(rts_mesh_structured(2, 2, 0, 0, 1, 1, 0, 7, &m) == RTS_ERR_INVALID_ARGUMENT);
  CHECK(rts_mesh_test1(0, 3, 8, 0.0, 1, &m) == RTS_ERR_INVALID_ARGUMENT);
  CHECK(rts_mesh_stats_get(nullptr, nullptr) == RTS_ERR_INVALID_ARGUMENT);

  const fs::path bad = scratch("bad.txt");
  std::ofstream(bad) << "vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary 1\n0 1 D\n";
  CHECK(rts_mesh_read(bad.c_str(), &m) == RTS_ERR_MESH);

  rts_solver_options o;
  rts_solver_options_default(&o);
  CHECK(o.dt == 1e-3);
  CHECK(o.predictor_tol == 1e-10);
  o.dt = -1;
  rts_mesh *sq = nullptr;
  REQUIRE(rts_mesh_structured(2, 2, 0, 0, 1, 1, 1, RTS_BOUNDARY_DIRICHLET, &sq) == RTS_OK);
  rts_problem_params prob{RTS_PROBLEM_DECAY, 1.0, 0.0, 0.0};
  rts_solver *s = nullptr;
  CHECK(rts_solver_create(sq, &prob, &o, &s) == RTS_ERR_INVALID_ARGUMENT);
  CHECK(s == nullptr);
  rts_mesh_free(sq);

  double rates[1];
  const double errs[2] = {4, 1}, sizes[2] = {1, 1};
  CHECK(rts_convergence_rates(errs, sizes, 2, rates) == RTS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("rate arithmetic") {
  const double errs[3] = {1.142e-2, 2.865e-3, 7.187e-4}, sizes[3] = {4, 2, 1};
  double rates[2];
  REQUIRE(rts_convergence_rates(errs, sizes, 3, rates) == RTS_OK);
  CHECK(std::round(rates[0] * 1000) == 1995);
  CHECK(std::round(rates[1] * 1000) == 1995);
}

TEST_CASE("convergence table through the C API") {
  const int levels[2] = {0, 1};
  rts_convergence_config c{};
  c.scenario = 1;
  c.mode = RTS_STUDY_SPACE;
  c.base_cells = 2;
  c.levels = levels;
  c.num_levels = 2;
  c.dt = 0.01;
  c.t_final = 0.03;
  c.nu = 1.0;
  c.seed = 1;
  rts_solver_options o;
  rts_solver_options_default(&o);
  rts_table *t = nullptr;
  REQUIRE(rts_convergence_run(&c, &o, &t) == RTS_OK);
  CHECK(rts_table_rows(t) == 2);
  int level = -1;
  double size = 0;
  rts_errors e{};
  rts_run_diagnostics d{};
  REQUIRE(rts_table_row(t, 1, &level, &size, &e, &d) == RTS_OK);
  CHECK(level == 1);
  CHECK(d.steps == 3);
  CHECK(e.ux > 0.0);
  rts_errors r{};
  CHECK(rts_table_rate(t, 0, &r) == RTS_OK);
  CHECK(rts_table_rate(t, 1, &r) == RTS_ERR_INVALID_ARGUMENT);
  CHECK(rts_table_row(t, 2, &level, &size, &e, &d) == RTS_ERR_INVALID_ARGUMENT);
  const fs::path csv = scratch("table.csv");
  REQUIRE(rts_table_write_csv(t, csv.c_str()) == RTS_OK);
  CHECK(slurp(csv).rfind("level,h,", 0) == 0);
  rts_table_free(t);
}

TEST_CASE("step-by-step solver") {
  rts_mesh *m = nullptr;
  REQUIRE(rts_mesh_test1(0, 2, 4, 0.0, 1, &m) == RTS_OK);
  rts_solver_options o;
  rts_solver_options_default(&o);
  o.dt = 0.01;
  rts_problem_params p{RTS_PROBLEM_TEST1, 1.0, 0.0, 0.0};
  rts_solver *s = nullptr;
  REQUIRE(rts_solver_create(m, &p, &o, &s) == RTS_OK);
  rts_mesh_free(m);  // the solver keeps its own copy
  rts_step_info info{};
  for (int n = 0; n < 3; ++n) REQUIRE(rts_solver_step(s, &info) == RTS_OK);
  CHECK(info.step == 3);
  CHECK(rts_solver_time(s) == doctest::Approx(0.03));
  CHECK(info.max_divergence <= 1e-10 * info.divergence_scale);
  rts_errors e{};
  REQUIRE(rts_solver_errors(s, &e) == RTS_OK);
  CHECK(e.psi > 0.0);
  const fs::path vtk = scratch("step.vtk");
  REQUIRE(rts_solver_write_vtk(s, vtk.c_str()) == RTS_OK);
  CHECK(slurp(vtk).rfind("# vtk DataFile Version", 0) == 0);
  rts_solver_free(s);

  rts_mesh *sq = nullptr;
  REQUIRE(rts_mesh_structured(4, 4, 0, 0, 1, 1, RTS_DIAGONAL_UNION_JACK, RTS_BOUNDARY_DIRICHLET, &sq) == RTS_OK);
  rts_problem_params decay{RTS_PROBLEM_DECAY, 1.0, 0.0, 0.0};
  REQUIRE(rts_solver_create(sq, &decay, &o, &s) == RTS_OK);
  for (int n = 0; n < 5; ++n) REQUIRE(rts_solver_step(s, &info) == RTS_OK);
  rts_ledger l{};
  REQUIRE(rts_solver_ledger(s, &l) == RTS_OK);
  CHECK(l.rhs > 0.0);
  CHECK(l.lhs <= l.rhs);
  CHECK(l.violations == 0);
  CHECK(rts_solver_errors(s, &e) == RTS_ERR_INVALID_ARGUMENT);
  rts_solver_free(s);
  rts_mesh_free(sq);
}

TEST_CASE("cavity through the C API") {
  rts_cavity_config c{1.0, -1.0, 4, 0.2, 1.0, 5};
  rts_solver_options o;
  rts_solver_options_default(&o);
  o.dt = 0.05;
  rts_cavity *cav = nullptr;
  REQUIRE(rts_cavity_run(&c, &o, &cav) == RTS_OK);
  rts_cavity_summary s{};
  REQUIRE(rts_cavity_summary_get(cav, &s) == RTS_OK);
  CHECK(s.lid_datum == 1.0);
  CHECK(std::abs(s.net_boundary_flux) <= 1e-12);
  CHECK(s.diagnostics.steps == 4);
  const fs::path csv = scratch("cavity.csv"), vtk = scratch("cavity.vtk");
  REQUIRE(rts_cavity_write_profiles(cav, csv.c_str()) == RTS_OK);
  REQUIRE(rts_cavity_write_vtk(cav, vtk.c_str()) == RTS_OK);
  CHECK(slurp(vtk).rfind("# vtk DataFile Version", 0) == 0);
  rts_cavity_free(cav);
  c.cells = 3;
  CHECK(rts_cavity_run(&c, &o, &cav) == RTS_ERR_INVALID_ARGUMENT);
}
