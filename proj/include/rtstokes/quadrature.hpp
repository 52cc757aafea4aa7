#pragma once

#include <span>
#include <vector>

#include "rtstokes/error.hpp"
#include "rtstokes/geometry.hpp"
#include "rtstokes/mesh.hpp"

namespace rtstokes {

/// Triangle rule on the reference element; weights sum to one, so physical
/// integrals are |E| * sum_i w_i f(F_E(x_i)).
struct QuadratureRule {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  int degree = 0;
};

/// Rule on [0, 1]; weights sum to one.
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int degree = 0;
};

/// Vertices and centroid with weights 1/12, 1/12, 1/12, 3/4. Samples V_h
/// functions exactly where their degrees of freedom live.
const QuadratureRule &mfmfe_rule();
/// Edge-midpoint rule, weights 1/3; exact on P2.
const QuadratureRule &midpoint_rule();
/// 7-point degree-5 rule used for non-polynomial data.
const QuadratureRule &degree5_rule();
/// 2- or 3-point Gauss-Legendre.
const LineRule &gauss_legendre(int points);

inline Vec2 map_to_element(const Mesh &mesh, int t, const Vec2 &ref) {
  return mesh.corner(t, 0) + mesh.triangle(t).jacobian * ref;
}

template <class F>
double integrate(const Mesh &mesh, int t, const QuadratureRule &rule, F &&f) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(map_to_element(mesh, t, rule.nodes[i]));
  return mesh.triangle(t).area * s;
}

/// (f, g)_{Q,E} = |E| sum_i w_i f(r_i) . g(r_i) over vertices and centroid.
template <class F, class G>
double quad_q(const Mesh &mesh, int t, F &&f, G &&g) {
  const QuadratureRule &rule = mfmfe_rule();
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Vec2 x = map_to_element(mesh, t, rule.nodes[i]);
    s += rule.weights[i] * dot(f(x), g(x));
  }
  return mesh.triangle(t).area * s;
}

template <class F>
double gauss3(const Mesh &mesh, int t, F &&f) {
  return integrate(mesh, t, midpoint_rule(), std::forward<F>(f));
}

/// Integral over the segment [a, b]; f receives the physical point and the
/// arclength fraction s in [0, 1] measured from a.
template <class F>
double segment_gauss(const Vec2 &a, const Vec2 &b, F &&f, int points) {
  const double len = norm(b - a);
  if (!(len > 0.0)) throw InvalidArgument("zero-length edge");
  const LineRule &rule = gauss_legendre(points);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i];
    s += rule.weights[i] * f(a + u * (b - a), u);
  }
  return len * s;
}

/// Integral over mesh edge e, parameterized from e.v[0] to e.v[1].
template <class F>
double edge_gauss(const Mesh &mesh, int e, F &&f, int points) {
  const Edge &edge = mesh.edge(e);
  return segment_gauss(mesh.vertex(edge.v[0]), mesh.vertex(edge.v[1]), std::forward<F>(f), points);
}

}  // namespace rtstokes
