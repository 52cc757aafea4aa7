#include "rtstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rtstokes/error.hpp"

namespace rtstokes {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// CSR-style inversion of an incidence list.
void invert_incidence(int num_rows, const std::vector<std::pair<int, int>> &pairs,
                      std::vector<int> &offsets, std::vector<int> &list) {
  offsets.assign(num_rows + 1, 0);
  for (const auto &[row, col] : pairs) ++offsets[row + 1];
  for (int i = 0; i < num_rows; ++i) offsets[i + 1] += offsets[i];
  list.resize(pairs.size());
  std::vector<int> fill(offsets.begin(), offsets.end() - 1);
  for (const auto &[row, col] : pairs) list[fill[row]++] = col;
  for (int i = 0; i < num_rows; ++i) std::sort(list.begin() + offsets[i], list.begin() + offsets[i + 1]);
}

bool strictly_inside_segment(const Vec2 &p, const Vec2 &a, const Vec2 &b, double tol) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = dot(p - a, ab) / len2;
  if (t <= tol || t >= 1.0 - tol) return false;
  return std::abs(cross(ab, p - a)) <= tol * len2;
}

}  // namespace

std::span<const int> Mesh::vertex_edges(int v) const {
  return {vertex_edge_list_.data() + vertex_edge_offsets_[v],
          static_cast<std::size_t>(vertex_edge_offsets_[v + 1] - vertex_edge_offsets_[v])};
}

std::span<const int> Mesh::vertex_triangles(int v) const {
  return {vertex_tri_list_.data() + vertex_tri_offsets_[v],
          static_cast<std::size_t>(vertex_tri_offsets_[v + 1] - vertex_tri_offsets_[v])};
}

double Mesh::total_area() const {
  double area = 0.0;
  for (const Triangle &t : triangles_) area += t.area;
  return area;
}

Vec2 Mesh::centroid(int t) const {
  const Triangle &tri = triangles_[t];
  return (1.0 / 3.0) * (vertices_[tri.v[0]] + vertices_[tri.v[1]] + vertices_[tri.v[2]]);
}

Mesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                const BoundaryRule &rule) {
  const int nv = static_cast<int>(vertices.size());
  const int nt = static_cast<int>(triangles.size());
  if (nv < 3 || nt < 1) throw MeshError("mesh needs at least 3 vertices and 1 triangle");

  Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Vec2 hi{-lo.x, -lo.y};
  for (const Vec2 &p : vertices) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const double bbox_area = (hi.x - lo.x) * (hi.y - lo.y);
  const double min_area = 1e-14 * bbox_area;

  Mesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.triangles_.resize(nt);
  std::vector<std::uint8_t> used(nv, 0);

  for (int t = 0; t < nt; ++t) {
    auto idx = triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (idx[k] < 0 || idx[k] >= nv) {
        std::ostringstream msg;
        msg << "triangle " << t << " references vertex " << idx[k] << " outside [0, " << nv << ")";
        throw MeshError(msg.str());
      }
      used[idx[k]] = 1;
    }
    if (idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2])
      throw MeshError("triangle " + std::to_string(t) + " repeats a vertex");
    double area = signed_area(mesh.vertices_[idx[0]], mesh.vertices_[idx[1]], mesh.vertices_[idx[2]]);
    if (std::abs(area) < min_area) throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    if (area < 0) {
      std::swap(idx[1], idx[2]);
      area = -area;
    }
    Triangle &tri = mesh.triangles_[t];
    tri.v = idx;
    const Vec2 &r1 = mesh.vertices_[idx[0]];
    tri.jacobian = Mat2::from_columns(mesh.vertices_[idx[1]] - r1, mesh.vertices_[idx[2]] - r1);
    tri.area = area;
  }
  for (int v = 0; v < nv; ++v)
    if (!used[v]) throw MeshError("vertex " + std::to_string(v) + " is not referenced by any triangle");

  // Edge table in order of first appearance.
  std::unordered_map<std::uint64_t, int> edge_of;
  edge_of.reserve(static_cast<std::size_t>(nt) * 2);
  for (int t = 0; t < nt; ++t) {
    Triangle &tri = mesh.triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri.v[(k + 1) % 3];
      const int b = tri.v[(k + 2) % 3];
      auto [it, inserted] = edge_of.try_emplace(edge_key(a, b), mesh.num_edges());
      if (inserted) {
        Edge e;
        e.v = {a, b};
        e.elements = {t, -1};
        mesh.edges_.push_back(e);
      } else {
        Edge &e = mesh.edges_[it->second];
        if (e.elements[1] >= 0)
          throw MeshError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") is shared by more than two triangles");
        e.elements[1] = t;
      }
      tri.edges[k] = it->second;
    }
  }

  for (Edge &e : mesh.edges_) {
    const Vec2 &pa = mesh.vertices_[e.v[0]];
    const Vec2 &pb = mesh.vertices_[e.v[1]];
    const Vec2 tangent = pb - pa;
    e.length = norm(tangent);
    // Interior: elements[0] < elements[1] by construction order.
    const Triangle &owner = mesh.triangles_[e.elements[0]];
    // Right-hand normal of the owner's counterclockwise traversal is outward.
    int k = 0;
    while (owner.edges[k] != &e - mesh.edges_.data()) ++k;
    const Vec2 a = mesh.vertices_[owner.v[(k + 1) % 3]];
    const Vec2 b = mesh.vertices_[owner.v[(k + 2) % 3]];
    const Vec2 t = b - a;
    e.normal = (1.0 / norm(t)) * Vec2{t.y, -t.x};
    mesh.h_max_ = std::max(mesh.h_max_, e.length);
  }

  for (int t = 0; t < nt; ++t) {
    Triangle &tri = mesh.triangles_[t];
    for (int k = 0; k < 3; ++k) tri.edge_sign[k] = mesh.edges_[tri.edges[k]].elements[0] == t ? 1 : -1;
  }

  mesh.boundary_vertex_.assign(nv, 0);
  std::vector<int> boundary_edges;
  for (int ei = 0; ei < mesh.num_edges(); ++ei) {
    Edge &e = mesh.edges_[ei];
    if (!e.on_boundary()) continue;
    boundary_edges.push_back(ei);
    mesh.boundary_vertex_[e.v[0]] = mesh.boundary_vertex_[e.v[1]] = 1;
    const Vec2 mid = 0.5 * (mesh.vertices_[e.v[0]] + mesh.vertices_[e.v[1]]);
    e.kind = rule ? rule(mid, e.v) : BoundaryKind::Interior;
    if (e.kind == BoundaryKind::Interior) {
      std::ostringstream msg;
      msg << "boundary edge (" << e.v[0] << ", " << e.v[1] << ") at (" << mid.x << ", " << mid.y
          << ") is not marked Dirichlet or Neumann";
      throw MeshError(msg.str());
    }
  }

  // A boundary vertex in the interior of another boundary edge is a hanging node.
  std::vector<int> bverts;
  for (int v = 0; v < nv; ++v)
    if (mesh.boundary_vertex_[v]) bverts.push_back(v);
  for (int ei : boundary_edges) {
    const Edge &e = mesh.edges_[ei];
    const Vec2 &pa = mesh.vertices_[e.v[0]];
    const Vec2 &pb = mesh.vertices_[e.v[1]];
    for (int v : bverts) {
      if (v == e.v[0] || v == e.v[1]) continue;
      if (strictly_inside_segment(mesh.vertices_[v], pa, pb, 1e-12))
        throw MeshError("hanging node: vertex " + std::to_string(v) + " lies on edge (" +
                        std::to_string(e.v[0]) + ", " + std::to_string(e.v[1]) + ")");
    }
  }

  std::vector<std::pair<int, int>> ve, vt;
  ve.reserve(mesh.edges_.size() * 2);
  vt.reserve(static_cast<std::size_t>(nt) * 3);
  for (int ei = 0; ei < mesh.num_edges(); ++ei) {
    ve.emplace_back(mesh.edges_[ei].v[0], ei);
    ve.emplace_back(mesh.edges_[ei].v[1], ei);
  }
  for (int t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) vt.emplace_back(mesh.triangles_[t].v[k], t);
  invert_incidence(nv, ve, mesh.vertex_edge_offsets_, mesh.vertex_edge_list_);
  invert_incidence(nv, vt, mesh.vertex_tri_offsets_, mesh.vertex_tri_list_);
  return mesh;
}

Mesh uniform_refine(const Mesh &mesh) {
  const int nv = mesh.num_vertices();
  std::vector<Vec2> vertices(mesh.vertices().begin(), mesh.vertices().end());
  vertices.reserve(nv + mesh.num_edges());
  std::unordered_map<std::uint64_t, BoundaryKind> child_kind;
  for (int ei = 0; ei < mesh.num_edges(); ++ei) {
    const Edge &e = mesh.edge(ei);
    vertices.push_back(0.5 * (mesh.vertex(e.v[0]) + mesh.vertex(e.v[1])));
    if (e.on_boundary()) {
      child_kind[edge_key(e.v[0], nv + ei)] = e.kind;
      child_kind[edge_key(nv + ei, e.v[1])] = e.kind;
    }
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 4);
  for (const Triangle &t : mesh.triangles()) {
    const int m0 = nv + t.edges[0], m1 = nv + t.edges[1], m2 = nv + t.edges[2];
    tris.push_back({t.v[0], m2, m1});
    tris.push_back({m2, t.v[1], m0});
    tris.push_back({m1, m0, t.v[2]});
    tris.push_back({m0, m1, m2});
  }
  BoundaryRule inherit = [&child_kind](const Vec2 &, std::array<int, 2> v) {
    auto it = child_kind.find(edge_key(v[0], v[1]));
    return it == child_kind.end() ? BoundaryKind::Interior : it->second;
  };
  return build_mesh(std::move(vertices), std::move(tris), inherit);
}

double aspect_ratio(const Vec2 &p0, const Vec2 &p1, const Vec2 &p2) {
  const double area = std::abs(signed_area(p0, p1, p2));
  const double lmax = std::max({norm(p1 - p0), norm(p2 - p1), norm(p0 - p2)});
  if (!(lmax > 0.0) || area <= 1e-14 * lmax * lmax)
    throw InvalidArgument("aspect ratio of a degenerate triangle");
  const double hmin = 2.0 * area / lmax;
  return hmin / lmax * 2.0 / std::sqrt(3.0);
}

double aspect_ratio(const Mesh &mesh, int t) {
  return aspect_ratio(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
}

namespace {

// Bit-reproducible uniform deviate in [0, 1) from mt19937_64.
double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Mesh perturb_mesh(const Mesh &mesh, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0) || magnitude >= 0.5)
    throw InvalidArgument("perturbation magnitude must lie in [0, 0.5)");
  std::vector<Vec2> pts(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<std::array<int, 3>> tris;
  tris.reserve(mesh.num_triangles());
  for (const Triangle &t : mesh.triangles()) tris.push_back(t.v);

  std::map<std::uint64_t, BoundaryKind> kinds;
  for (const Edge &e : mesh.edges())
    if (e.on_boundary()) kinds[edge_key(e.v[0], e.v[1])] = e.kind;

  if (magnitude > 0.0) {
    const double min_area = 1e-3 * mesh.total_area() / mesh.num_triangles();
    std::mt19937_64 rng(seed);
    constexpr int kMaxHalvings = 30;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      // Draw unconditionally so the stream does not depend on the geometry.
      const double radius = std::sqrt(uniform01(rng));
      const double angle = 2.0 * M_PI * uniform01(rng);
      if (mesh.is_boundary_vertex(v)) continue;
      double hloc = std::numeric_limits<double>::max();
      for (int ei : mesh.vertex_edges(v)) hloc = std::min(hloc, mesh.edge(ei).length);
      Vec2 delta = magnitude * hloc * radius * Vec2{std::cos(angle), std::sin(angle)};
      const Vec2 origin = pts[v];
      bool ok = false;
      for (int attempt = 0; attempt <= kMaxHalvings && !ok; ++attempt, delta *= 0.5) {
        pts[v] = origin + delta;
        ok = true;
        for (int t : mesh.vertex_triangles(v)) {
          const auto &idx = tris[t];
          if (signed_area(pts[idx[0]], pts[idx[1]], pts[idx[2]]) <= min_area) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) {
        pts[v] = origin;
        bool original_ok = true;
        for (int t : mesh.vertex_triangles(v)) {
          const auto &idx = tris[t];
          if (signed_area(pts[idx[0]], pts[idx[1]], pts[idx[2]]) <= 0.0) original_ok = false;
        }
        if (!original_ok)
          throw MeshError("perturbation cannot keep triangles around vertex " + std::to_string(v) +
                          " positively oriented");
      }
    }
  }

  BoundaryRule keep = [&kinds](const Vec2 &, std::array<int, 2> ev) {
    auto it = kinds.find(edge_key(ev[0], ev[1]));
    return it == kinds.end() ? BoundaryKind::Interior : it->second;
  };
  return build_mesh(std::move(pts), std::move(tris), keep);
}

Mesh structured_rectangle(int nx, int ny, Vec2 lower, Vec2 upper, DiagonalPattern pattern,
                          const BoundaryRule &rule) {
  if (nx < 1 || ny < 1) throw InvalidArgument("structured mesh needs at least one cell per direction");
  if (!(upper.x > lower.x) || !(upper.y > lower.y)) throw InvalidArgument("empty rectangle");
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      pts.push_back({lower.x + (upper.x - lower.x) * i / nx, lower.y + (upper.y - lower.y) * j / ny});
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(nx) * ny * 2);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const bool forward = pattern == DiagonalPattern::Uniform || (i + j) % 2 == 0;
      if (forward) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
  }
  return build_mesh(std::move(pts), std::move(tris), rule);
}

MeshStatistics mesh_statistics(const Mesh &mesh) {
  MeshStatistics s;
  s.num_triangles = mesh.num_triangles();
  s.num_vertices = mesh.num_vertices();
  s.num_edges = mesh.num_edges();
  s.h_max = mesh.h_max();
  for (const Edge &e : mesh.edges()) s.num_boundary_edges += e.on_boundary() ? 1 : 0;
  s.min_aspect_ratio = std::numeric_limits<double>::max();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double ar = aspect_ratio(mesh, t);
    s.min_aspect_ratio = std::min(s.min_aspect_ratio, ar);
    s.max_aspect_ratio = std::max(s.max_aspect_ratio, ar);
    int bin = static_cast<int>(ar * MeshStatistics::kHistogramBins);
    bin = std::clamp(bin, 0, MeshStatistics::kHistogramBins - 1);
    ++s.aspect_histogram[bin];
  }
  return s;
}

}  // namespace rtstokes
