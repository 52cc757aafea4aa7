// End-to-end checks of the rtstokes executable: run it, then inspect the files it leaves behind.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#ifndef RTS_CLI_PATH
#error "RTS_CLI_PATH must name the CLI binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / "rts_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string &args) {
  const std::string cmd = std::string("'") + RTS_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json manifest(const fs::path &dir) { return json::parse(slurp(dir / "manifest.json")); }

int count_lines(const std::string &s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("two-level space study writes two rows and one rate") {
  const fs::path out = fresh_dir("space");
  REQUIRE(run("convergence --levels 0,1 --dt 0.01 --tfinal 0.02 --out '" + out.string() + "'") == 0);
  const std::string csv = slurp(out / "convergence_space.csv");
  CHECK(count_lines(csv) == 3);
  const json m = manifest(out);
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["experiment"] == "convergence-space");
  CHECK(m["config"]["dt"] == "0.01");
  const json &rows = m["results"]["rows"];
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].contains("rates"));
  CHECK(rows[1].contains("rates"));
}

TEST_CASE("an empty config file means defaults") {
  const fs::path out = fresh_dir("defaults");
  const fs::path cfg = out / "empty.cfg";
  std::ofstream(cfg) << "";
  REQUIRE(run("mesh-info --config '" + cfg.string() + "' --mesh 4 --out '" + out.string() + "'") == 0);
  const json m = manifest(out);
  CHECK(m["config"]["nu"] == "1");
  CHECK(m["config"]["dt"] == "0.001");
  CHECK(m["config"]["rel_tol"] == "1e-10");
  CHECK(fs::exists(out / "mesh_stats.csv"));
  CHECK(fs::exists(out / "mesh.txt"));
}

TEST_CASE("negative dt is a configuration error") {
  const fs::path out = fresh_dir("baddt");
  const fs::path cfg = out / "bad.cfg";
  std::ofstream(cfg) << "dt = -1\n";
  CHECK(run("convergence --config '" + cfg.string() + "' --out '" + out.string() + "'") == 2);
  const json m = manifest(out);
  CHECK(m["status"] == "error");
  CHECK(m["exit_code"] == 2);
  CHECK(m["error"].get<std::string>().find("dt must be positive") != std::string::npos);
  CHECK(run("convergence --no-such-flag") == 2);
}

TEST_CASE("a flag overrides the config file") {
  const fs::path out = fresh_dir("precedence");
  const fs::path cfg = out / "c.cfg";
  std::ofstream(cfg) << "nu = 5\nmesh = 2\n";
  REQUIRE(run("mesh-info --config '" + cfg.string() + "' --nu 0.25 --out '" + out.string() + "'") == 0);
  CHECK(manifest(out)["config"]["nu"] == "0.25");
}

TEST_CASE("cavity writes a legacy VTK file") {
  const fs::path out = fresh_dir("cavity");
  REQUIRE(run("cavity --bottom 0 --dt 0.05 --tfinal 0.1 --set cavity_cells=4 --out '" + out.string() + "'") == 0);
  const std::string vtk = slurp(out / "cavity.vtk");
  CHECK(vtk.rfind("# vtk DataFile Version", 0) == 0);
  CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(fs::exists(out / "cavity_profiles.csv"));
}

TEST_CASE("same seed, same bytes") {
  const fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  const std::string args = "run --problem decay --mesh perturbed:4:0.2 --seed 11 --dt 0.01 --tfinal 0.05 --out ";
  REQUIRE(run(args + "'" + a.string() + "'") == 0);
  REQUIRE(run(args + "'" + b.string() + "'") == 0);
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  CHECK(slurp(a / "final.vtk") == slurp(b / "final.vtk"));
}

TEST_CASE("an unreadable mesh file is reported in the manifest") {
  const fs::path out = fresh_dir("missing_mesh");
  CHECK(run("mesh-info --mesh file:" + (out / "none.txt").string() + " --out '" + out.string() + "'") != 0);
  CHECK(manifest(out)["status"] == "error");
}
