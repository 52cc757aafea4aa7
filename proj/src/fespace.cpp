#include "rtstokes/fespace.hpp"

#include <cmath>
#include <sstream>

#include "rtstokes/error.hpp"
#include "rtstokes/quadrature.hpp"

namespace rtstokes {

namespace {

// Quadratic in monomials 1, x, y, x^2, xy, y^2.
using Quadratic = std::array<double, 6>;

constexpr double kSqrt2 = 1.41421356237309504880;

struct ShapeRow {
  Quadratic x, y;
};

constexpr std::array<ShapeRow, 8> kTable = {{
    {{-1, 3, 1, -2, -1, 0}, {0, 0, 1, 0, -2, -1}},
    {{0, 1, 0, -1, -2, 0}, {-1, 1, 3, 0, -1, -2}},
    {{0, 0, 0, 1, -1, 0}, {0, -1, 1, 0, 1, -1}},
    {{0, -kSqrt2, 0, 2 * kSqrt2, kSqrt2, 0}, {0, 0, -kSqrt2, 0, 2 * kSqrt2, kSqrt2}},
    {{0, -kSqrt2, 0, kSqrt2, 2 * kSqrt2, 0}, {0, 0, -kSqrt2, 0, kSqrt2, 2 * kSqrt2}},
    {{0, 1, -1, -1, 1, 0}, {0, 0, 0, 0, -1, 1}},
    {{0, 6, 0, -6, -3, 0}, {0, 0, 3, 0, -6, -3}},
    {{0, 3, 0, -3, -6, 0}, {0, 0, 6, 0, -3, -6}},
}};

double eval_quadratic(const Quadratic &c, const Vec2 &p) {
  return c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y;
}

constexpr std::array<int, 6> kEdgeOf = {1, 2, 2, 0, 0, 1};
constexpr std::array<double, 3> kRefEdgeLength = {kSqrt2, 1.0, 1.0};

}  // namespace

Vec2 Rt1ReferenceBasis::value(int m, const Vec2 &ref) {
  return {eval_quadratic(kTable[m].x, ref), eval_quadratic(kTable[m].y, ref)};
}

double Rt1ReferenceBasis::divergence(int m, const Vec2 &p) {
  const Quadratic &cx = kTable[m].x;
  const Quadratic &cy = kTable[m].y;
  return (cx[1] + 2 * cx[3] * p.x + cx[4] * p.y) + (cy[2] + cy[4] * p.x + 2 * cy[5] * p.y);
}

Vec2 Rt1ReferenceBasis::node(int i) {
  static constexpr std::array<Vec2, 4> nodes = {{{0, 0}, {1, 0}, {0, 1}, {1.0 / 3.0, 1.0 / 3.0}}};
  return nodes[i];
}

Vec2 Rt1ReferenceBasis::normal(int i, int j) {
  const double r = 1.0 / kSqrt2;
  static const std::array<std::array<Vec2, 2>, 4> normals = {{
      {{{-1, 0}, {0, -1}}},
      {{{0, -1}, {r, r}}},
      {{{r, r}, {-1, 0}}},
      {{{1, 0}, {0, 1}}},
  }};
  return normals[i][j];
}

int Rt1ReferenceBasis::edge_of(int m) { return kEdgeOf[m]; }

DofMap::DofMap(const Mesh &mesh)
    : num_edges_(mesh.num_edges()),
      num_triangles_(mesh.num_triangles()),
      element_dofs_(mesh.num_triangles()),
      element_signs_(mesh.num_triangles()) {
  for (int t = 0; t < num_triangles_; ++t) {
    const Triangle &tri = mesh.triangle(t);
    for (int m = 0; m < 6; ++m) {
      const int vertex = tri.v[m / 2];
      const int k = kEdgeOf[m];
      const int e = tri.edges[k];
      const int endpoint = mesh.edge(e).v[0] == vertex ? 0 : 1;
      element_dofs_[t][m] = edge_dof(e, endpoint);
      element_signs_[t][m] = tri.edge_sign[k];
    }
    element_dofs_[t][6] = centroid_dof(t, 0);
    element_dofs_[t][7] = centroid_dof(t, 1);
    element_signs_[t][6] = element_signs_[t][7] = 1;
  }
}

std::array<double, 3> barycentric(const Mesh &mesh, int t, const Vec2 &x) {
  const Triangle &tri = mesh.triangle(t);
  const Vec2 ref = tri.jacobian.inverse() * (x - mesh.corner(t, 0));
  return {1.0 - ref.x - ref.y, ref.x, ref.y};
}

double WhFunction::at(const Mesh &mesh, int t, const Vec2 &x) const {
  const auto lam = barycentric(mesh, t, x);
  return lam[0] * values[3 * t] + lam[1] * values[3 * t + 1] + lam[2] * values[3 * t + 2];
}

Vec2 WhFunction::gradient(const Mesh &mesh, int t) const {
  // grad w = J^{-T} (w1 - w0, w2 - w0).
  const Mat2 jinv = mesh.triangle(t).jacobian.inverse();
  const Vec2 dref{values[3 * t + 1] - values[3 * t], values[3 * t + 2] - values[3 * t]};
  return jinv.transpose() * dref;
}

Rt1Space::Rt1Space(const Mesh &mesh) : mesh_(&mesh), dofs_(mesh), maps_(mesh.num_triangles()) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle &tri = mesh.triangle(t);
    ElementMap &em = maps_[t];
    em.jac = tri.jacobian;
    em.det = tri.jacobian.det();
    em.jac_inv = tri.jacobian.inverse();
    for (int m = 0; m < 6; ++m) {
      const int k = kEdgeOf[m];
      em.vertex_scale[m] = tri.edge_sign[k] * mesh.edge(tri.edges[k]).length / kRefEdgeLength[k];
    }
    // Value at the centroid is J a / det; pick a so that it is e_x or e_y.
    em.centroid_coeffs[0] = em.det * (em.jac_inv * Vec2{1, 0});
    em.centroid_coeffs[1] = em.det * (em.jac_inv * Vec2{0, 1});
  }
}

Vec2 Rt1Space::reference_point(int t, const Vec2 &x) const {
  const Vec2 ref = maps_[t].jac_inv * (x - mesh_->corner(t, 0));
  constexpr double tol = 1e-10;
  if (ref.x < -tol || ref.y < -tol || ref.x + ref.y > 1.0 + tol) {
    std::ostringstream msg;
    msg << "point (" << x.x << ", " << x.y << ") lies outside element " << t;
    throw InvalidArgument(msg.str());
  }
  return ref;
}

Vec2 Rt1Space::eval_ref(int t, int m, const Vec2 &ref) const {
  const ElementMap &em = maps_[t];
  Vec2 vref;
  if (m < 6) {
    vref = em.vertex_scale[m] * Rt1ReferenceBasis::value(m, ref);
  } else {
    const Vec2 &a = em.centroid_coeffs[m - 6];
    vref = a.x * Rt1ReferenceBasis::value(6, ref) + a.y * Rt1ReferenceBasis::value(7, ref);
  }
  return (1.0 / em.det) * (em.jac * vref);
}

double Rt1Space::div_ref(int t, int m, const Vec2 &ref) const {
  const ElementMap &em = maps_[t];
  double d;
  if (m < 6) {
    d = em.vertex_scale[m] * Rt1ReferenceBasis::divergence(m, ref);
  } else {
    const Vec2 &a = em.centroid_coeffs[m - 6];
    d = a.x * Rt1ReferenceBasis::divergence(6, ref) + a.y * Rt1ReferenceBasis::divergence(7, ref);
  }
  return d / em.det;
}

Vec2 Rt1Space::eval_basis(int t, int m, const Vec2 &x) const { return eval_ref(t, m, reference_point(t, x)); }

double Rt1Space::eval_div(int t, int m, const Vec2 &x) const { return div_ref(t, m, reference_point(t, x)); }

Vec2 Rt1Space::evaluate(const VhFunction &v, int t, const Vec2 &x) const {
  const Vec2 ref = reference_point(t, x);
  const auto &dofs = dofs_.element_dofs(t);
  Vec2 s;
  for (int m = 0; m < 8; ++m) s += v.coeffs[dofs[m]] * eval_ref(t, m, ref);
  return s;
}

double Rt1Space::divergence(const VhFunction &v, int t, const Vec2 &x) const {
  const Vec2 ref = reference_point(t, x);
  const auto &dofs = dofs_.element_dofs(t);
  double s = 0.0;
  for (int m = 0; m < 8; ++m) s += v.coeffs[dofs[m]] * div_ref(t, m, ref);
  return s;
}

Vec2 Rt1Space::node_value(const VhFunction &v, int t, int k) const {
  const Vec2 ref = Rt1ReferenceBasis::node(k);
  const auto &dofs = dofs_.element_dofs(t);
  if (k == 3) return {v.coeffs[dofs[6]], v.coeffs[dofs[7]]};
  return v.coeffs[dofs[2 * k]] * eval_ref(t, 2 * k, ref) + v.coeffs[dofs[2 * k + 1]] * eval_ref(t, 2 * k + 1, ref);
}

VhFunction interpolate_vh(const Rt1Space &space, const VectorField &field) {
  const Mesh &mesh = space.mesh();
  const DofMap &dofs = space.dofs();
  VhFunction v{std::vector<double>(dofs.num_vh(), 0.0)};
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge &edge = mesh.edge(e);
    for (int k = 0; k < 2; ++k) v.coeffs[DofMap::edge_dof(e, k)] = dot(field(mesh.vertex(edge.v[k])), edge.normal);
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 c = field(mesh.centroid(t));
    v.coeffs[dofs.centroid_dof(t, 0)] = c.x;
    v.coeffs[dofs.centroid_dof(t, 1)] = c.y;
  }
  return v;
}

WhFunction project_wh(const Mesh &mesh, const ScalarField &field) {
  WhFunction w{std::vector<double>(3 * mesh.num_triangles(), 0.0)};
  const QuadratureRule &rule = degree5_rule();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.triangle(t).area;
    if (!(area > 0.0)) throw MeshError("singular local mass matrix on element " + std::to_string(t));
    std::array<double, 3> rhs{};
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const Vec2 &r = rule.nodes[q];
      const double f = rule.weights[q] * field(map_to_element(mesh, t, r));
      rhs[0] += f * (1.0 - r.x - r.y);
      rhs[1] += f * r.x;
      rhs[2] += f * r.y;
    }
    // Mass matrix |E|/12 [2 1 1; 1 2 1; 1 1 2] with rhs already divided by |E|.
    for (int k = 0; k < 3; ++k)
      w.values[3 * t + k] = 3.0 * (3.0 * rhs[k] - rhs[(k + 1) % 3] - rhs[(k + 2) % 3]);
  }
  return w;
}

WhVector project_wh(const Mesh &mesh, const VectorField &field) {
  return {project_wh(mesh, [&](const Vec2 &p) { return field(p).x; }),
          project_wh(mesh, [&](const Vec2 &p) { return field(p).y; })};
}

WhFunction sample_wh(const Mesh &mesh, const ScalarField &field) {
  WhFunction w{std::vector<double>(3 * mesh.num_triangles(), 0.0)};
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) w.values[3 * t + k] = field(mesh.corner(t, k));
  return w;
}

std::array<double, 2> project_trace(const Vec2 &a, const Vec2 &b, const ScalarField &f) {
  const double len = norm(b - a);
  const double m0 = segment_gauss(a, b, [&](const Vec2 &p, double s) { return f(p) * (1.0 - s); }, 3);
  const double m1 = segment_gauss(a, b, [&](const Vec2 &p, double s) { return f(p) * s; }, 3);
  // Inverse of the edge mass matrix |e|/6 [2 1; 1 2].
  return {2.0 / len * (2.0 * m0 - m1), 2.0 / len * (2.0 * m1 - m0)};
}

std::array<double, 2> project_trace(const Mesh &mesh, int e, const ScalarField &f) {
  const Edge &edge = mesh.edge(e);
  return project_trace(mesh.vertex(edge.v[0]), mesh.vertex(edge.v[1]), f);
}

}  // namespace rtstokes
