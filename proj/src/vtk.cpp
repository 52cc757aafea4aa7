#include "rtstokes/vtk.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "rtstokes/error.hpp"

namespace rtstokes {

void write_vtk(std::ostream &out, const Rt1Space &space, const VhFunction &u, const WhFunction &psi,
               const WhVector &q, const std::string &title) {
  const Mesh &mesh = space.mesh();
  const int nt = mesh.num_triangles();
  out << "# vtk DataFile Version 3.0\n";
  // The title line must be a single line of at most 256 characters.
  std::string t = title.substr(0, 255);
  for (char &c : t)
    if (c == '\n') c = ' ';
  out << t << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(12);
  out << "POINTS " << 3 * nt << " double\n";
  for (int e = 0; e < nt; ++e)
    for (int k = 0; k < 3; ++k) {
      const Vec2 &p = mesh.corner(e, k);
      out << p.x << " " << p.y << " 0\n";
    }
  out << "CELLS " << nt << " " << 4 * nt << "\n";
  for (int e = 0; e < nt; ++e) out << "3 " << 3 * e << " " << 3 * e + 1 << " " << 3 * e + 2 << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (int e = 0; e < nt; ++e) out << "5\n";

  out << "POINT_DATA " << 3 * nt << "\n";
  out << "VECTORS velocity double\n";
  for (int e = 0; e < nt; ++e)
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = space.node_value(u, e, k);
      out << v.x << " " << v.y << " 0\n";
    }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < 3 * nt; ++i) out << psi.values[i] << "\n";
  out << "VECTORS pressure_gradient double\n";
  for (int i = 0; i < 3 * nt; ++i) out << q.x.values[i] << " " << q.y.values[i] << " 0\n";

  out << "CELL_DATA " << nt << "\n";
  out << "SCALARS divergence double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < nt; ++e) out << space.divergence(u, e, mesh.centroid(e)) << "\n";
}

void write_vtk_file(const std::string &path, const Rt1Space &space, const VhFunction &u, const WhFunction &psi,
                    const WhVector &q, const std::string &title) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_vtk(out, space, u, psi, q, title);
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace rtstokes
