#pragma once

#include <iosfwd>
#include <string>

#include "rtstokes/fespace.hpp"
#include "rtstokes/mesh.hpp"

namespace rtstokes {

/// Legacy ASCII VTK unstructured grid. Every triangle gets its own three
/// points so discontinuous fields are stored exactly: point data holds the
/// velocity, the pressure and the pressure gradient at element vertices.
void write_vtk(std::ostream &out, const Rt1Space &space, const VhFunction &u, const WhFunction &psi,
               const WhVector &q, const std::string &title);
void write_vtk_file(const std::string &path, const Rt1Space &space, const VhFunction &u, const WhFunction &psi,
                    const WhVector &q, const std::string &title);

}  // namespace rtstokes
