#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rtstokes/geometry.hpp"
#include "rtstokes/mesh.hpp"

namespace rtstokes {

using ScalarField = std::function<double(const Vec2 &)>;
using VectorField = std::function<Vec2(const Vec2 &)>;

/// The eight RT1 shape functions on the reference triangle (0,0), (1,0),
/// (0,1). Local index m = 2 * i + j pairs node i (three vertices, then the
/// centroid) with its j-th normal; v(node k) . n(k, l) = delta_ik delta_jl.
struct Rt1ReferenceBasis {
  static constexpr int kSize = 8;

  static Vec2 value(int m, const Vec2 &ref);
  static double divergence(int m, const Vec2 &ref);
  /// Node i in 0..3 (centroid last).
  static Vec2 node(int i);
  /// Unit normal j of node i: the outward normals of the two edges meeting
  /// at a vertex, or the Cartesian axes at the centroid.
  static Vec2 normal(int i, int j);
  /// Local edge (opposite-vertex numbering) carrying vertex DOF m < 6.
  static int edge_of(int m);
};

/// Global numbering for V_h (two normal components per edge, one vector per
/// centroid) and W_h (three vertex values per element).
class DofMap {
 public:
  explicit DofMap(const Mesh &mesh);

  int num_vh() const { return 2 * num_edges_ + 2 * num_triangles_; }
  int num_wh() const { return 3 * num_triangles_; }

  /// DOF carrying the normal component of edge e at endpoint e.v[endpoint].
  static int edge_dof(int e, int endpoint) { return 2 * e + endpoint; }
  int centroid_dof(int t, int component) const { return 2 * num_edges_ + 2 * t + component; }
  static int wh_dof(int t, int local_vertex) { return 3 * t + local_vertex; }
  bool is_centroid_dof(int dof) const { return dof >= 2 * num_edges_; }

  const std::array<int, 8> &element_dofs(int t) const { return element_dofs_[t]; }
  /// +1 / -1 orientation factor per local DOF (centroid DOFs always +1).
  const std::array<int, 8> &element_signs(int t) const { return element_signs_[t]; }

 private:
  int num_edges_ = 0;
  int num_triangles_ = 0;
  std::vector<std::array<int, 8>> element_dofs_;
  std::vector<std::array<int, 8>> element_signs_;
};

/// Coefficients over V_h. Edge DOFs are normal components in the global
/// edge normal; centroid DOFs are Cartesian components.
struct VhFunction {
  std::vector<double> coeffs;
};

/// Discontinuous P1: values at the three vertices of every element.
struct WhFunction {
  std::vector<double> values;

  double at(const Mesh &mesh, int t, const Vec2 &x) const;
  /// Constant gradient on element t.
  Vec2 gradient(const Mesh &mesh, int t) const;
};

struct WhVector {
  WhFunction x, y;
  Vec2 at(const Mesh &mesh, int t, const Vec2 &p) const { return {x.at(mesh, t, p), y.at(mesh, t, p)}; }
  Vec2 node(int t, int k) const { return {x.values[3 * t + k], y.values[3 * t + k]}; }
};

/// Barycentric coordinates of x with respect to triangle t.
std::array<double, 3> barycentric(const Mesh &mesh, int t, const Vec2 &x);

/// RT1 space on a mesh: DOF map plus the per-element Piola maps. The mesh
/// must outlive the space.
class Rt1Space {
 public:
  explicit Rt1Space(const Mesh &mesh);

  const Mesh &mesh() const { return *mesh_; }
  const DofMap &dofs() const { return dofs_; }

  /// Physical value of local basis function m on element t, including the
  /// orientation sign, at a point of t. Throws InvalidArgument outside t.
  Vec2 eval_basis(int t, int m, const Vec2 &x) const;
  double eval_div(int t, int m, const Vec2 &x) const;

  Vec2 evaluate(const VhFunction &v, int t, const Vec2 &x) const;
  double divergence(const VhFunction &v, int t, const Vec2 &x) const;
  /// Value at local vertex k (0..2) or the centroid (k == 3) of element t.
  Vec2 node_value(const VhFunction &v, int t, int k) const;

 private:
  struct ElementMap {
    Mat2 jac, jac_inv;
    double det = 0.0;
    std::array<double, 6> vertex_scale{};   // sign * |e| / |e_ref|
    std::array<Vec2, 2> centroid_coeffs{};  // reference combination of m = 6, 7
  };

  Vec2 reference_point(int t, const Vec2 &x) const;
  Vec2 eval_ref(int t, int m, const Vec2 &ref) const;
  double div_ref(int t, int m, const Vec2 &ref) const;

  const Mesh *mesh_;
  DofMap dofs_;
  std::vector<ElementMap> maps_;
};

/// Nodal interpolant: normal components at edge endpoints, value at
/// centroids. Reproduces (P1)^2 and RT1 fields exactly.
VhFunction interpolate_vh(const Rt1Space &space, const VectorField &field);

/// Elementwise L2 projection onto P1, integrated with the degree-5 rule.
WhFunction project_wh(const Mesh &mesh, const ScalarField &field);
WhVector project_wh(const Mesh &mesh, const VectorField &field);
/// Injects a field that is already P1 on each element by sampling vertices.
WhFunction sample_wh(const Mesh &mesh, const ScalarField &field);

/// L2 projection of f onto linear functions on the segment [a, b]. Returns
/// the values at a and b. f receives the physical point.
std::array<double, 2> project_trace(const Vec2 &a, const Vec2 &b, const ScalarField &f);
std::array<double, 2> project_trace(const Mesh &mesh, int e, const ScalarField &f);

}  // namespace rtstokes
