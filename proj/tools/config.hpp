#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtscli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Experiment { ConvergenceSpace, ConvergenceTime, Cavity, Custom, MeshInfo };

const char *experiment_name(Experiment e);

struct MeshSource {
  enum class Kind { None, File, Structured, Perturbed };
  Kind kind = Kind::None;
  std::string path;           ///< Kind::File
  int cells = 8;              ///< cells per side for generated grids
  double perturbation = 0.0;  ///< Kind::Perturbed
  int refine = 0;             ///< uniform refinements applied after generation / reading
};

/// Validated run parameters. Defaults: nu = 1, dt = 1e-3, rel_tol = 1e-10.
struct RunConfig {
  Experiment experiment = Experiment::Custom;
  MeshSource mesh;
  double nu = 1.0;
  double dt = 1e-3;
  double t_final = 0.1;
  int scenario = 1;
  std::string out = ".";
  std::uint64_t seed = 1;
  double rel_tol = 1e-10;          ///< predictor PCG
  double projection_tol = 1e-13;   ///< projection PCG
  int max_iter = 0;
  bool concurrent = true;

  // convergence studies
  std::vector<int> levels{0, 1, 2};
  std::vector<double> dts{1e-1, 1e-2, 1e-3};
  int base_cells = 8;
  int time_level = 3;
  double perturbation = 0.0;

  // cavity
  double lid_velocity = 1.0;
  double bottom_velocity = 0.0;
  int cavity_cells = 16;
  int samples = 33;

  // custom runs
  std::string problem = "test1";  ///< test1 | cavity | decay
  int vtk_every = 0;              ///< 0: final snapshot only
};

using KeyValues = std::map<std::string, std::string>;

/// Keys accepted in files and through --set.
const std::vector<std::string> &known_keys();

/// Reads "key = value" lines; '#' starts a comment. Unknown keys,
/// duplicates and malformed lines are errors.
KeyValues parse_key_values(const std::string &text, const std::string &origin = "<config>");
KeyValues read_config_file(const std::string &path);

/// Applies `file` then `flags` (flags win) on top of the defaults of
/// `experiment` and validates the result.
RunConfig build_config(Experiment experiment, const KeyValues &file, const KeyValues &flags);

/// Throws ConfigError describing the first violated constraint.
void validate(const RunConfig &config);

/// "8" -> structured 8x8, "perturbed:8:0.2", "file:mesh.txt" or a bare path.
MeshSource parse_mesh_source(const std::string &text);
std::string to_string(const MeshSource &source);

/// Flat key/value echo of a config (same keys as the file format).
KeyValues echo(const RunConfig &config);

}  // namespace rtscli
