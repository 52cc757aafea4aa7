#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "rtstokes/error.hpp"
#include "rtstokes/mesh.hpp"

namespace rtstokes {

namespace {

// Next non-empty, non-comment line; false at end of input.
bool next_line(std::istream &in, std::string &line, int &lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

int read_section(std::istream &in, const char *name, int &lineno) {
  std::string line;
  if (!next_line(in, line, lineno))
    throw IoError(std::string("mesh file: missing '") + name + "' section");
  std::istringstream ls(line);
  std::string key;
  long count = -1;
  ls >> key >> count;
  if (key != name || count < 0)
    throw IoError("mesh file line " + std::to_string(lineno) + ": expected '" + name + " <count>'");
  return static_cast<int>(count);
}

[[noreturn]] void bad_line(int lineno, const std::string &what) {
  throw IoError("mesh file line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

void write_statistics_csv(const MeshStatistics &s, std::ostream &out) {
  out << "quantity,value\n";
  out << "triangles," << s.num_triangles << "\n";
  out << "vertices," << s.num_vertices << "\n";
  out << "edges," << s.num_edges << "\n";
  out << "boundary_edges," << s.num_boundary_edges << "\n";
  out << std::setprecision(10);
  out << "h_max," << s.h_max << "\n";
  out << "min_aspect_ratio," << s.min_aspect_ratio << "\n";
  out << "max_aspect_ratio," << s.max_aspect_ratio << "\n";
  out << "\nbin_lower,bin_upper,count\n";
  for (int b = 0; b < MeshStatistics::kHistogramBins; ++b) {
    out << static_cast<double>(b) / MeshStatistics::kHistogramBins << ","
        << static_cast<double>(b + 1) / MeshStatistics::kHistogramBins << "," << s.aspect_histogram[b]
        << "\n";
  }
}

Mesh read_mesh(std::istream &in) {
  int lineno = 0;
  std::string line;

  const int nv = read_section(in, "vertices", lineno);
  std::vector<Vec2> pts(nv);
  for (int i = 0; i < nv; ++i) {
    if (!next_line(in, line, lineno)) bad_line(lineno, "unexpected end of vertex list");
    std::istringstream ls(line);
    if (!(ls >> pts[i].x >> pts[i].y)) bad_line(lineno, "expected 'x y'");
  }

  const int nt = read_section(in, "triangles", lineno);
  std::vector<std::array<int, 3>> tris(nt);
  for (int i = 0; i < nt; ++i) {
    if (!next_line(in, line, lineno)) bad_line(lineno, "unexpected end of triangle list");
    std::istringstream ls(line);
    if (!(ls >> tris[i][0] >> tris[i][1] >> tris[i][2])) bad_line(lineno, "expected 'a b c'");
  }

  const int nb = read_section(in, "boundary", lineno);
  std::unordered_map<std::uint64_t, BoundaryKind> kinds;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (int i = 0; i < nb; ++i) {
    if (!next_line(in, line, lineno)) bad_line(lineno, "unexpected end of boundary list");
    std::istringstream ls(line);
    int a = -1, b = -1;
    std::string marker;
    if (!(ls >> a >> b >> marker)) bad_line(lineno, "expected 'a b D|N'");
    BoundaryKind kind;
    if (marker == "D" || marker == "d")
      kind = BoundaryKind::Dirichlet;
    else if (marker == "N" || marker == "n")
      kind = BoundaryKind::Neumann;
    else
      bad_line(lineno, "boundary marker must be D or N, got '" + marker + "'");
    if (a < 0 || b < 0) bad_line(lineno, "negative vertex index");
    kinds[key(a, b)] = kind;
  }

  BoundaryRule lookup = [&](const Vec2 &, std::array<int, 2> v) {
    auto it = kinds.find(key(v[0], v[1]));
    return it == kinds.end() ? BoundaryKind::Interior : it->second;
  };
  return build_mesh(std::move(pts), std::move(tris), lookup);
}

Mesh read_mesh_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

void write_mesh(const Mesh &mesh, std::ostream &out) {
  out << std::setprecision(17);
  out << "# rtstokes triangular mesh\n";
  out << "vertices " << mesh.num_vertices() << "\n";
  for (const Vec2 &p : mesh.vertices()) out << p.x << " " << p.y << "\n";
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const Triangle &t : mesh.triangles()) out << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
  int nb = 0;
  for (const Edge &e : mesh.edges()) nb += e.on_boundary() ? 1 : 0;
  out << "boundary " << nb << "\n";
  for (const Edge &e : mesh.edges()) {
    if (!e.on_boundary()) continue;
    out << e.v[0] << " " << e.v[1] << " " << (e.kind == BoundaryKind::Neumann ? "N" : "D") << "\n";
  }
}

void write_mesh_file(const Mesh &mesh, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file '" + path + "'");
  write_mesh(mesh, out);
}

}  // namespace rtstokes
