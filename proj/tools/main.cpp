// rtstokes command-line front end. Talks to the solver only through the C API.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "rtstokes/rtstokes.h"

namespace fs = std::filesystem;
using nlohmann::json;
using rtscli::Experiment;
using rtscli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(rts_status s, const char *what) {
  if (s != RTS_OK)
    throw RunError(std::string(what) + ": " + rts_status_string(s) + ": " + rts_last_error_message());
}

// Owning wrappers for the opaque handles.
template <class T, void (*Free)(T *)>
struct Handle {
  T *p = nullptr;
  Handle() = default;
  Handle(const Handle &) = delete;
  Handle &operator=(const Handle &) = delete;
  ~Handle() { Free(p); }
  T **out() { return &p; }
  T *get() const { return p; }
};
using MeshHandle = Handle<rts_mesh, rts_mesh_free>;
using TableHandle = Handle<rts_table, rts_table_free>;
using CavityHandle = Handle<rts_cavity, rts_cavity_free>;
using SolverHandle = Handle<rts_solver, rts_solver_free>;

json to_json(const rts_errors &e) { return {{"psi", e.psi}, {"ux", e.ux}, {"uy", e.uy}}; }

json to_json(const rts_run_diagnostics &d) {
  return {{"steps", d.steps},
          {"max_divergence_ratio", d.max_divergence_ratio},
          {"max_q_orthogonality", d.max_q_orthogonality},
          {"max_pcg_iterations", d.max_iterations},
          {"seconds", d.seconds}};
}

// NaN is not representable in JSON.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

rts_solver_options solver_options(const RunConfig &c) {
  rts_solver_options o;
  rts_solver_options_default(&o);
  o.dt = c.dt;
  o.predictor_tol = c.rel_tol;
  o.projection_tol = c.projection_tol;
  o.max_iter = c.max_iter;
  o.concurrent = c.concurrent ? 1 : 0;
  return o;
}

std::string out_path(const RunConfig &c, const std::string &name) { return (fs::path(c.out) / name).string(); }

void build_mesh(const RunConfig &c, MeshHandle &mesh) {
  using Kind = rtscli::MeshSource::Kind;
  const auto &src = c.mesh;
  if (src.kind == Kind::File) {
    check(rts_mesh_read(src.path.c_str(), mesh.out()), "reading mesh");
  } else if (c.problem == "test1") {
    const double mag = src.kind == Kind::Perturbed ? src.perturbation : 0.0;
    check(rts_mesh_test1(0, c.scenario, src.cells, mag, c.seed, mesh.out()), "building mesh");
  } else {
    MeshHandle base;
    check(rts_mesh_structured(src.cells, src.cells, 0.0, 0.0, 1.0, 1.0, RTS_DIAGONAL_UNION_JACK,
                              RTS_BOUNDARY_DIRICHLET, base.out()),
          "building mesh");
    if (src.kind == Kind::Perturbed)
      check(rts_mesh_perturb(base.get(), src.perturbation, c.seed, mesh.out()), "perturbing mesh");
    else
      std::swap(base.p, mesh.p);
  }
  for (int i = 0; i < src.refine; ++i) {
    MeshHandle fine;
    check(rts_mesh_refine(mesh.get(), fine.out()), "refining mesh");
    std::swap(fine.p, mesh.p);
  }
}

json stats_json(const rts_mesh_stats &s) {
  std::vector<int> hist(s.aspect_histogram, s.aspect_histogram + RTS_ASPECT_BINS);
  return {{"triangles", s.num_triangles},
          {"vertices", s.num_vertices},
          {"edges", s.num_edges},
          {"boundary_edges", s.num_boundary_edges},
          {"h_max", s.h_max},
          {"min_aspect_ratio", s.min_aspect_ratio},
          {"max_aspect_ratio", s.max_aspect_ratio},
          {"aspect_histogram", hist}};
}

void run_convergence(const RunConfig &c, json &results, std::vector<std::string> &outputs) {
  const bool space = c.experiment == Experiment::ConvergenceSpace;
  rts_convergence_config cc{};
  cc.scenario = c.scenario;
  cc.mode = space ? RTS_STUDY_SPACE : RTS_STUDY_TIME;
  cc.base_cells = c.base_cells;
  cc.levels = c.levels.data();
  cc.num_levels = static_cast<int>(c.levels.size());
  cc.time_level = c.time_level;
  cc.dt = c.dt;
  cc.dts = c.dts.data();
  cc.num_dts = static_cast<int>(c.dts.size());
  cc.t_final = c.t_final;
  cc.nu = c.nu;
  cc.perturbation = c.perturbation;
  cc.seed = c.seed;
  const rts_solver_options opt = solver_options(c);

  TableHandle table;
  check(rts_convergence_run(&cc, &opt, table.out()), "convergence study");
  const std::string csv = out_path(c, space ? "convergence_space.csv" : "convergence_time.csv");
  check(rts_table_write_csv(table.get(), csv.c_str()), "writing table");
  outputs.push_back(csv);

  json rows = json::array();
  const int n = rts_table_rows(table.get());
  std::printf("%-6s %-11s %-11s %-11s %-11s %-7s %-7s %-7s\n", "level", space ? "h" : "dt", "L2_psi", "L2_ux",
              "L2_uy", "r_psi", "r_ux", "r_uy");
  for (int i = 0; i < n; ++i) {
    int level = 0;
    double size = 0.0;
    rts_errors err{};
    rts_run_diagnostics diag{};
    check(rts_table_row(table.get(), i, &level, &size, &err, &diag), "reading table");
    json row{{"level", level}, {space ? "h" : "dt", size}, {"errors", to_json(err)}, {"diagnostics", to_json(diag)}};
    std::printf("%-6d %-11.4e %-11.4e %-11.4e %-11.4e", level, size, err.psi, err.ux, err.uy);
    if (i > 0) {
      rts_errors r{};
      check(rts_table_rate(table.get(), i - 1, &r), "reading rates");
      row["rates"] = {{"psi", number_or_null(r.psi)}, {"ux", number_or_null(r.ux)}, {"uy", number_or_null(r.uy)}};
      std::printf(" %-7.3f %-7.3f %-7.3f", r.psi, r.ux, r.uy);
    }
    std::printf("\n");
    rows.push_back(row);
  }
  results["rows"] = rows;
}

void run_cavity(const RunConfig &c, json &results, std::vector<std::string> &outputs) {
  rts_cavity_config cc{};
  cc.lid_velocity = c.lid_velocity;
  cc.bottom_velocity = c.bottom_velocity;
  cc.cells = c.cavity_cells;
  cc.t_final = c.t_final;
  cc.nu = c.nu;
  cc.samples = c.samples;
  const rts_solver_options opt = solver_options(c);
  CavityHandle cav;
  check(rts_cavity_run(&cc, &opt, cav.out()), "cavity run");
  rts_cavity_summary s{};
  check(rts_cavity_summary_get(cav.get(), &s), "cavity summary");
  const std::string csv = out_path(c, "cavity_profiles.csv");
  const std::string vtk = out_path(c, "cavity.vtk");
  check(rts_cavity_write_profiles(cav.get(), csv.c_str()), "writing profiles");
  check(rts_cavity_write_vtk(cav.get(), vtk.c_str()), "writing vtk");
  outputs.push_back(csv);
  outputs.push_back(vtk);
  results = {{"symmetry_error", s.symmetry_error},
             {"net_boundary_flux", s.net_boundary_flux},
             {"lid_datum", s.lid_datum},
             {"lid_computed", s.lid_computed},
             {"final_change", s.final_change},
             {"diagnostics", to_json(s.diagnostics)}};
  std::printf("cavity s=%g: symmetry error %.3e, lid u_x %.15g (datum %.15g), last change %.3e\n", c.bottom_velocity,
              s.symmetry_error, s.lid_computed, s.lid_datum, s.final_change);
}

void run_custom(const RunConfig &c, json &results, std::vector<std::string> &outputs) {
  MeshHandle mesh;
  build_mesh(c, mesh);
  rts_problem_params p{};
  p.kind = c.problem == "test1" ? RTS_PROBLEM_TEST1 : c.problem == "cavity" ? RTS_PROBLEM_CAVITY : RTS_PROBLEM_DECAY;
  p.nu = c.nu;
  p.lid_velocity = c.lid_velocity;
  p.bottom_velocity = c.bottom_velocity;
  const rts_solver_options opt = solver_options(c);
  SolverHandle solver;
  check(rts_solver_create(mesh.get(), &p, &opt, solver.out()), "creating solver");

  const int steps = static_cast<int>(std::llround(c.t_final / c.dt));
  const std::string hist_path = out_path(c, "history.csv");
  std::ofstream hist(hist_path);
  if (!hist) throw RunError("cannot write " + hist_path);
  hist.precision(10);
  hist << "step,time,iter_px,iter_py,iter_proj,div_ratio";
  if (p.kind == RTS_PROBLEM_TEST1) hist << ",L2_psi,L2_ux,L2_uy";
  hist << ",ledger_lhs,ledger_rhs\n";

  double worst_div = 0.0;
  rts_errors max_err{};
  for (int n = 0; n < steps; ++n) {
    rts_step_info info{};
    check(rts_solver_step(solver.get(), &info), "time step");
    const double ratio = info.divergence_scale > 0.0 ? info.max_divergence / info.divergence_scale : 0.0;
    worst_div = std::max(worst_div, ratio);
    hist << info.step << ',' << info.time << ',' << info.iterations[0] << ',' << info.iterations[1] << ','
         << info.iterations[2] << ',' << ratio;
    if (p.kind == RTS_PROBLEM_TEST1) {
      rts_errors e{};
      check(rts_solver_errors(solver.get(), &e), "errors");
      max_err = {std::max(max_err.psi, e.psi), std::max(max_err.ux, e.ux), std::max(max_err.uy, e.uy)};
      hist << ',' << e.psi << ',' << e.ux << ',' << e.uy;
    }
    rts_ledger l{};
    check(rts_solver_ledger(solver.get(), &l), "ledger");
    hist << ',' << l.lhs << ',' << l.rhs << '\n';
    if (c.vtk_every > 0 && (n + 1) % c.vtk_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%06d.vtk", n + 1);
      const std::string path = out_path(c, name);
      check(rts_solver_write_vtk(solver.get(), path.c_str()), "writing vtk");
      outputs.push_back(path);
    }
  }
  hist.close();
  outputs.push_back(hist_path);
  const std::string final_vtk = out_path(c, "final.vtk");
  check(rts_solver_write_vtk(solver.get(), final_vtk.c_str()), "writing vtk");
  outputs.push_back(final_vtk);

  rts_ledger l{};
  check(rts_solver_ledger(solver.get(), &l), "ledger");
  results = {{"steps", steps},
             {"final_time", rts_solver_time(solver.get())},
             {"max_divergence_ratio", worst_div},
             {"ledger", {{"lhs", l.lhs}, {"rhs", l.rhs}, {"lhs_exact", l.lhs_exact}, {"violations", l.violations}}}};
  if (p.kind == RTS_PROBLEM_TEST1) results["max_errors"] = to_json(max_err);
  std::printf("%s: %d steps to t=%g, max div ratio %.3e\n", c.problem.c_str(), steps, rts_solver_time(solver.get()),
              worst_div);
}

void run_mesh_info(const RunConfig &c, json &results, std::vector<std::string> &outputs) {
  MeshHandle mesh;
  build_mesh(c, mesh);
  rts_mesh_stats s{};
  check(rts_mesh_stats_get(mesh.get(), &s), "mesh statistics");
  const std::string csv = out_path(c, "mesh_stats.csv");
  const std::string txt = out_path(c, "mesh.txt");
  check(rts_mesh_write_statistics_csv(mesh.get(), csv.c_str()), "writing statistics");
  check(rts_mesh_write(mesh.get(), txt.c_str()), "writing mesh");
  outputs.push_back(csv);
  outputs.push_back(txt);
  results = stats_json(s);
  std::printf("triangles %d, vertices %d, edges %d (boundary %d), h_max %.6g, aspect ratio [%.3f, %.3f]\n",
              s.num_triangles, s.num_vertices, s.num_edges, s.num_boundary_edges, s.h_max, s.min_aspect_ratio,
              s.max_aspect_ratio);
}

struct Flags {
  std::optional<std::string> config, mesh, levels, dt, tfinal, nu, scenario, seed, out;
  std::optional<std::string> mode, dts, bottom, problem;
  std::vector<std::string> set;
};

void add_common(CLI::App *sub, Flags &f) {
  sub->add_option("--config", f.config, "key = value configuration file");
  sub->add_option("--mesh", f.mesh, "mesh source: <N>, structured:<N>, perturbed:<N>:<mag>, file:<path>");
  sub->add_option("--dt", f.dt, "time step");
  sub->add_option("--tfinal", f.tfinal, "final time");
  sub->add_option("--nu", f.nu, "kinematic viscosity");
  sub->add_option("--scenario", f.scenario, "boundary scenario of the manufactured test (1 or 2)");
  sub->add_option("--seed", f.seed, "seed for mesh perturbation");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--set", f.set, "extra key=value override (repeatable)");
}

rtscli::KeyValues flag_overrides(const Flags &f) {
  rtscli::KeyValues kv;
  auto put = [&](const char *key, const std::optional<std::string> &v) {
    if (v) kv[key] = *v;
  };
  for (const std::string &s : f.set) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw rtscli::ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  put("mesh", f.mesh);
  put("levels", f.levels);
  put("dt", f.dt);
  put("t_final", f.tfinal);
  put("nu", f.nu);
  put("scenario", f.scenario);
  put("seed", f.seed);
  put("out", f.out);
  put("mode", f.mode);
  put("dts", f.dts);
  put("bottom_velocity", f.bottom);
  put("problem", f.problem);
  return kv;
}

std::string command_line(int argc, char **argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Unsteady Stokes projection solver (RT1 / P1-discontinuous multipoint flux mixed elements)"};
  app.require_subcommand(1);
  Flags f;
  auto *conv = app.add_subcommand("convergence", "manufactured-solution convergence study");
  auto *cav = app.add_subcommand("cavity", "lid-driven cavity");
  auto *run = app.add_subcommand("run", "time stepping on a given mesh");
  auto *info = app.add_subcommand("mesh-info", "mesh statistics and export");
  for (auto *s : {conv, cav, run, info}) add_common(s, f);
  conv->add_option("--levels", f.levels, "comma-separated refinement levels (space study)");
  conv->add_option("--mode", f.mode, "space or time");
  conv->add_option("--dts", f.dts, "comma-separated time steps (time study)");
  cav->add_option("--bottom", f.bottom, "bottom wall velocity s");
  run->add_option("--problem", f.problem, "test1, cavity or decay");
  info->add_option("--problem", f.problem, "domain convention for generated meshes: test1, cavity or decay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  Experiment experiment = Experiment::Custom;
  if (conv->parsed()) experiment = Experiment::ConvergenceSpace;
  if (cav->parsed()) experiment = Experiment::Cavity;
  if (info->parsed()) experiment = Experiment::MeshInfo;

  const auto t0 = std::chrono::steady_clock::now();
  json manifest{{"tool", "rtstokes"},
                {"library_version", rts_version()},
                {"compiler", __VERSION__},
                {"command_line", command_line(argc, argv)},
                {"experiment", rtscli::experiment_name(experiment)}};
  std::string out_dir = f.out.value_or(".");
  std::vector<std::string> outputs;
  int code = kExitOk;

  try {
    rtscli::KeyValues file;
    if (f.config) file = rtscli::read_config_file(*f.config);
    if (!f.out && file.count("out")) out_dir = file.at("out");
    const RunConfig config = rtscli::build_config(experiment, file, flag_overrides(f));
    out_dir = config.out;
    manifest["experiment"] = rtscli::experiment_name(config.experiment);
    manifest["config"] = rtscli::echo(config);
    fs::create_directories(config.out);

    json results;
    switch (config.experiment) {
      case Experiment::ConvergenceSpace:
      case Experiment::ConvergenceTime: run_convergence(config, results, outputs); break;
      case Experiment::Cavity: run_cavity(config, results, outputs); break;
      case Experiment::Custom: run_custom(config, results, outputs); break;
      case Experiment::MeshInfo: run_mesh_info(config, results, outputs); break;
    }
    manifest["results"] = results;
    manifest["status"] = "ok";
  } catch (const rtscli::ConfigError &e) {
    manifest["status"] = "error";
    manifest["error"] = std::string("configuration: ") + e.what();
    std::cerr << "rtstokes: " << e.what() << '\n';
    code = kExitConfig;
  } catch (const std::exception &e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    std::cerr << "rtstokes: " << e.what() << '\n';
    code = kExitFailure;
  }

  manifest["outputs"] = outputs;
  manifest["exit_code"] = code;
  manifest["timings"] = {
      {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  try {
    fs::create_directories(out_dir);
    std::ofstream m(fs::path(out_dir) / "manifest.json");
    if (!m) throw std::runtime_error("cannot open manifest for writing");
    m << manifest.dump(2) << '\n';
  } catch (const std::exception &e) {
    std::cerr << "rtstokes: manifest not written to '" << out_dir << "': " << e.what() << '\n';
    if (code == kExitOk) code = kExitFailure;
  }
  return code;
}
