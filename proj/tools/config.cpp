#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rtscli {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <class T>
T parse_number(const std::string &key, const std::string &text) {
  T value{};
  const std::string t = trim(text);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("invalid value for '" + key + "': '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("value for '" + key + "' must be finite");
  }
  return value;
}

bool parse_bool(const std::string &key, const std::string &text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string &key, const std::string &text) {
  std::vector<T> out;
  for (const std::string &item : split(text, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError("'" + key + "' needs at least one value");
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <class T>
std::string join(const std::vector<T> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

bool uses_time_step(Experiment e) {
  return e == Experiment::ConvergenceSpace || e == Experiment::Cavity || e == Experiment::Custom;
}

bool near_multiple(double t, double dt) {
  const double n = t / dt;
  return n >= 1.0 - 1e-12 && std::abs(n - std::round(n)) <= 1e-8 * std::max(1.0, n);
}

}  // namespace

const char *experiment_name(Experiment e) {
  switch (e) {
    case Experiment::ConvergenceSpace: return "convergence-space";
    case Experiment::ConvergenceTime: return "convergence-time";
    case Experiment::Cavity: return "cavity";
    case Experiment::Custom: return "custom";
    case Experiment::MeshInfo: return "mesh-info";
  }
  return "unknown";
}

const std::vector<std::string> &known_keys() {
  static const std::vector<std::string> keys{
      "mesh",      "mesh_refine",     "nu",           "dt",         "t_final",       "scenario",
      "out",       "seed",            "rel_tol",      "projection_tol", "max_iter",   "concurrent",
      "mode",      "levels",          "dts",          "base_cells", "time_level",    "perturbation",
      "lid_velocity", "bottom_velocity", "cavity_cells", "samples", "problem",       "vtk_every"};
  return keys;
}

KeyValues parse_key_values(const std::string &text, const std::string &origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto &keys = known_keys();
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_config_file(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return parse_key_values(s.str(), path);
}

MeshSource parse_mesh_source(const std::string &text) {
  MeshSource m;
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty mesh source");
  if (t.rfind("file:", 0) == 0) {
    m.kind = MeshSource::Kind::File;
    m.path = t.substr(5);
    if (m.path.empty()) throw ConfigError("mesh source 'file:' needs a path");
    return m;
  }
  if (t.rfind("structured:", 0) == 0) {
    m.kind = MeshSource::Kind::Structured;
    m.cells = parse_number<int>("mesh", t.substr(11));
    return m;
  }
  if (t.rfind("perturbed:", 0) == 0) {
    const auto parts = split(t.substr(10), ':');
    if (parts.size() != 2) throw ConfigError("mesh source must read 'perturbed:<cells>:<magnitude>'");
    m.kind = MeshSource::Kind::Perturbed;
    m.cells = parse_number<int>("mesh", parts[0]);
    m.perturbation = parse_number<double>("mesh", parts[1]);
    return m;
  }
  if (std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    m.kind = MeshSource::Kind::Structured;
    m.cells = parse_number<int>("mesh", t);
    return m;
  }
  m.kind = MeshSource::Kind::File;
  m.path = t;
  return m;
}

std::string to_string(const MeshSource &m) {
  switch (m.kind) {
    case MeshSource::Kind::None: return "none";
    case MeshSource::Kind::File: return "file:" + m.path;
    case MeshSource::Kind::Structured: return "structured:" + std::to_string(m.cells);
    case MeshSource::Kind::Perturbed: return "perturbed:" + std::to_string(m.cells) + ":" + fmt(m.perturbation);
  }
  return "none";
}

RunConfig build_config(Experiment experiment, const KeyValues &file, const KeyValues &flags) {
  KeyValues kv = file;
  for (const auto &[k, v] : flags) {
    const auto &keys = known_keys();
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown key '" + k + "'");
    kv[k] = v;
  }

  RunConfig c;
  c.experiment = experiment;
  for (const auto &[key, value] : kv) {
    if (key == "mesh") c.mesh = parse_mesh_source(value);
    else if (key == "mesh_refine") c.mesh.refine = parse_number<int>(key, value);
    else if (key == "nu") c.nu = parse_number<double>(key, value);
    else if (key == "dt") c.dt = parse_number<double>(key, value);
    else if (key == "t_final") c.t_final = parse_number<double>(key, value);
    else if (key == "scenario") c.scenario = parse_number<int>(key, value);
    else if (key == "out") c.out = value;
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "rel_tol") c.rel_tol = parse_number<double>(key, value);
    else if (key == "projection_tol") c.projection_tol = parse_number<double>(key, value);
    else if (key == "max_iter") c.max_iter = parse_number<int>(key, value);
    else if (key == "concurrent") c.concurrent = parse_bool(key, value);
    else if (key == "levels") c.levels = parse_list<int>(key, value);
    else if (key == "dts") c.dts = parse_list<double>(key, value);
    else if (key == "base_cells") c.base_cells = parse_number<int>(key, value);
    else if (key == "time_level") c.time_level = parse_number<int>(key, value);
    else if (key == "perturbation") c.perturbation = parse_number<double>(key, value);
    else if (key == "lid_velocity") c.lid_velocity = parse_number<double>(key, value);
    else if (key == "bottom_velocity") c.bottom_velocity = parse_number<double>(key, value);
    else if (key == "cavity_cells") c.cavity_cells = parse_number<int>(key, value);
    else if (key == "samples") c.samples = parse_number<int>(key, value);
    else if (key == "problem") c.problem = value;
    else if (key == "vtk_every") c.vtk_every = parse_number<int>(key, value);
    else if (key == "mode") {
      if (experiment != Experiment::ConvergenceSpace && experiment != Experiment::ConvergenceTime)
        throw ConfigError("'mode' only applies to convergence studies");
      if (value == "space") c.experiment = Experiment::ConvergenceSpace;
      else if (value == "time") c.experiment = Experiment::ConvergenceTime;
      else throw ConfigError("mode must be 'space' or 'time', got '" + value + "'");
    }
  }
  validate(c);
  return c;
}

void validate(const RunConfig &c) {
  auto fail = [](const std::string &m) { throw ConfigError(m); };
  if (!(c.nu > 0.0)) fail("nu must be positive");
  if (!(c.dt > 0.0)) fail("dt must be positive");
  if (!(c.rel_tol > 0.0 && c.rel_tol < 1.0)) fail("rel_tol must lie in (0, 1)");
  if (!(c.projection_tol > 0.0 && c.projection_tol < 1.0)) fail("projection_tol must lie in (0, 1)");
  if (c.max_iter < 0) fail("max_iter must be nonnegative");
  if (c.scenario != 1 && c.scenario != 2) fail("scenario must be 1 or 2");
  if (c.out.empty()) fail("out must name a directory");
  if (c.mesh.refine < 0 || c.mesh.refine > 8) fail("mesh_refine must lie in [0, 8]");

  if (uses_time_step(c.experiment)) {
    if (c.t_final < c.dt) fail("t_final must be at least dt");
    if (!near_multiple(c.t_final, c.dt)) fail("t_final must be an integer multiple of dt");
  }

  switch (c.experiment) {
    case Experiment::ConvergenceSpace: {
      if (c.levels.size() < 1) fail("levels must list at least one refinement level");
      for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (c.levels[i] < 0 || c.levels[i] > 8) fail("levels must lie in [0, 8]");
        if (i && c.levels[i] <= c.levels[i - 1]) fail("levels must be strictly increasing");
      }
      break;
    }
    case Experiment::ConvergenceTime: {
      if (c.time_level < 0 || c.time_level > 8) fail("time_level must lie in [0, 8]");
      for (std::size_t i = 0; i < c.dts.size(); ++i) {
        if (!(c.dts[i] > 0.0)) fail("dts must be positive");
        if (i && !(c.dts[i] < c.dts[i - 1])) fail("dts must be strictly decreasing");
        if (c.t_final < c.dts[i]) fail("t_final must be at least every entry of dts");
        if (!near_multiple(c.t_final, c.dts[i])) fail("t_final must be an integer multiple of every entry of dts");
      }
      break;
    }
    case Experiment::Cavity:
      if (c.cavity_cells < 2 || c.cavity_cells % 2) fail("cavity_cells must be even and at least 2");
      if (c.samples < 3) fail("samples must be at least 3");
      break;
    case Experiment::Custom:
    case Experiment::MeshInfo:
      if (c.problem != "test1" && c.problem != "cavity" && c.problem != "decay")
        fail("problem must be test1, cavity or decay");
      if (c.vtk_every < 0) fail("vtk_every must be nonnegative");
      if (c.mesh.kind == MeshSource::Kind::None) fail("a mesh source is required (--mesh)");
      break;
  }
  if (c.experiment == Experiment::ConvergenceSpace || c.experiment == Experiment::ConvergenceTime) {
    if (c.base_cells < 2) fail("base_cells must be at least 2");
    if (!(c.perturbation >= 0.0 && c.perturbation < 0.5)) fail("perturbation must lie in [0, 0.5)");
  }

  switch (c.mesh.kind) {
    case MeshSource::Kind::None: break;
    case MeshSource::Kind::File:
      if (!std::filesystem::is_regular_file(c.mesh.path)) fail("mesh file '" + c.mesh.path + "' does not exist");
      break;
    case MeshSource::Kind::Perturbed:
      if (!(c.mesh.perturbation >= 0.0 && c.mesh.perturbation < 0.5)) fail("mesh perturbation must lie in [0, 0.5)");
      [[fallthrough]];
    case MeshSource::Kind::Structured:
      if (c.mesh.cells < 1 || c.mesh.cells > 4096) fail("structured mesh needs 1 to 4096 cells per side");
      break;
  }
}

KeyValues echo(const RunConfig &c) {
  KeyValues kv;
  kv["experiment"] = experiment_name(c.experiment);
  kv["mesh"] = to_string(c.mesh);
  kv["mesh_refine"] = std::to_string(c.mesh.refine);
  kv["nu"] = fmt(c.nu);
  kv["dt"] = fmt(c.dt);
  kv["t_final"] = fmt(c.t_final);
  kv["scenario"] = std::to_string(c.scenario);
  kv["out"] = c.out;
  kv["seed"] = std::to_string(c.seed);
  kv["rel_tol"] = fmt(c.rel_tol);
  kv["projection_tol"] = fmt(c.projection_tol);
  kv["max_iter"] = std::to_string(c.max_iter);
  kv["concurrent"] = c.concurrent ? "true" : "false";
  kv["levels"] = join(c.levels);
  kv["dts"] = join(c.dts);
  kv["base_cells"] = std::to_string(c.base_cells);
  kv["time_level"] = std::to_string(c.time_level);
  kv["perturbation"] = fmt(c.perturbation);
  kv["lid_velocity"] = fmt(c.lid_velocity);
  kv["bottom_velocity"] = fmt(c.bottom_velocity);
  kv["cavity_cells"] = std::to_string(c.cavity_cells);
  kv["samples"] = std::to_string(c.samples);
  kv["problem"] = c.problem;
  kv["vtk_every"] = std::to_string(c.vtk_every);
  return kv;
}

}  // namespace rtscli
