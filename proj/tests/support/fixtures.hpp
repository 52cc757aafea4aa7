#pragma once

#include <random>
#include <vector>

#include "rtstokes/mesh.hpp"

namespace fixtures {

using rtstokes::BoundaryKind;
using rtstokes::Mesh;
using rtstokes::Vec2;

inline rtstokes::BoundaryRule all(BoundaryKind kind) {
  return [kind](const Vec2 &, std::array<int, 2>) { return kind; };
}

/// Neumann on the bottom side (y = y0), Dirichlet elsewhere.
inline rtstokes::BoundaryRule neumann_below(double y0) {
  return [y0](const Vec2 &m, std::array<int, 2>) {
    return m.y < y0 + 1e-12 ? BoundaryKind::Neumann : BoundaryKind::Dirichlet;
  };
}

inline Mesh reference_triangle(BoundaryKind kind = BoundaryKind::Dirichlet) {
  return rtstokes::build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, all(kind));
}

inline Mesh two_triangle_square(const rtstokes::BoundaryRule &rule = all(BoundaryKind::Dirichlet)) {
  return rtstokes::build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}, rule);
}

/// 2x2 cells (8 triangles) on the unit square with the interior vertex moved.
inline Mesh small_distorted(const rtstokes::BoundaryRule &rule) {
  Mesh m = rtstokes::structured_rectangle(2, 2, {0, 0}, {1, 1}, rtstokes::DiagonalPattern::Uniform, rule);
  return rtstokes::perturb_mesh(m, 0.3, 7);
}

/// Random affine image of the reference triangle, counterclockwise and not
/// too flat.
inline std::array<Vec2, 3> random_triangle(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    std::array<Vec2, 3> p{Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}};
    const double a = rtstokes::signed_area(p[0], p[1], p[2]);
    if (std::abs(a) < 0.1) continue;
    if (a < 0) std::swap(p[1], p[2]);
    return p;
  }
}

inline Mesh single_triangle(const std::array<Vec2, 3> &p, BoundaryKind kind = BoundaryKind::Dirichlet) {
  return rtstokes::build_mesh({p[0], p[1], p[2]}, {{0, 1, 2}}, all(kind));
}

inline std::vector<double> random_vector(std::mt19937_64 &rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double &x : v) x = u(rng);
  return v;
}

}  // namespace fixtures
