#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rtstokes/geometry.hpp"

namespace rtstokes {

enum class BoundaryKind : std::uint8_t {
  Interior = 0,
  Dirichlet = 1,  ///< velocity prescribed
  Neumann = 2,    ///< normal stress prescribed
};

/// Decides the boundary portion of a boundary edge. Receives the edge
/// midpoint and its two vertex indices. Returning Interior for a boundary
/// edge is an error ("unmarked boundary edge").
using BoundaryRule = std::function<BoundaryKind(const Vec2 &midpoint, std::array<int, 2> vertices)>;

struct Edge {
  /// Endpoints. The V_h degree of freedom 2e lives at v[0], 2e+1 at v[1].
  std::array<int, 2> v{};
  /// Global unit normal. Points away from elements[0]: from the lower
  /// element index to the higher for interior edges, outward on the boundary.
  Vec2 normal;
  /// Adjacent elements; elements[1] == -1 on the boundary.
  std::array<int, 2> elements{-1, -1};
  BoundaryKind kind = BoundaryKind::Interior;
  double length = 0.0;

  bool on_boundary() const { return elements[1] < 0; }
};

struct Triangle {
  /// Counterclockwise vertex indices.
  std::array<int, 3> v{};
  /// Local edge k is the edge opposite local vertex k.
  std::array<int, 3> edges{};
  /// +1 where the global edge normal is this triangle's outward normal.
  std::array<int, 3> edge_sign{};
  /// J = [r2 - r1, r3 - r1].
  Mat2 jacobian;
  double area = 0.0;
};

/// Unstructured conforming triangulation. Immutable once built.
class Mesh {
 public:
  Mesh() = default;

  std::span<const Vec2> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const Edge> edges() const { return edges_; }

  const Vec2 &vertex(int i) const { return vertices_[i]; }
  const Triangle &triangle(int t) const { return triangles_[t]; }
  const Edge &edge(int e) const { return edges_[e]; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Edges incident to vertex v, in edge-table order.
  std::span<const int> vertex_edges(int v) const;
  /// Triangles incident to vertex v, in triangle order.
  std::span<const int> vertex_triangles(int v) const;
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }

  /// Maximal edge length.
  double h_max() const { return h_max_; }
  double total_area() const;

  /// Vertex coordinate of local vertex k of triangle t.
  const Vec2 &corner(int t, int k) const { return vertices_[triangles_[t].v[k]]; }
  Vec2 centroid(int t) const;
  /// Unit outward normal of local edge k of triangle t.
  Vec2 outward_normal(int t, int k) const {
    const Triangle &tri = triangles_[t];
    return tri.edge_sign[k] * edges_[tri.edges[k]].normal;
  }

  friend Mesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                         const BoundaryRule &rule);

 private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<int> vertex_edge_offsets_, vertex_edge_list_;
  std::vector<int> vertex_tri_offsets_, vertex_tri_list_;
  std::vector<std::uint8_t> boundary_vertex_;
  double h_max_ = 0.0;
};

/// Builds the full connectivity. Clockwise triangles are reoriented.
/// Throws MeshError on out-of-range or unused vertices, degenerate
/// triangles, edges shared by more than two triangles, hanging nodes, and
/// boundary edges the rule leaves unmarked.
Mesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                const BoundaryRule &rule);

/// Splits every triangle into four through its edge midpoints. Boundary
/// markers are inherited from the parent edges.
Mesh uniform_refine(const Mesh &mesh);

/// Normalized aspect ratio (h_min / L_max) * 2 / sqrt(3); 1 for equilateral
/// triangles. Throws InvalidArgument for degenerate input.
double aspect_ratio(const Vec2 &p0, const Vec2 &p1, const Vec2 &p2);
double aspect_ratio(const Mesh &mesh, int t);

/// Moves interior vertices by a seeded random displacement of at most
/// `magnitude` times the shortest incident edge. A displacement that would
/// invert or flatten an incident triangle is halved until it does not.
Mesh perturb_mesh(const Mesh &mesh, double magnitude, std::uint64_t seed);

enum class DiagonalPattern {
  Uniform,    ///< every cell cut from bottom-left to top-right
  UnionJack,  ///< cut direction alternates in a checkerboard
};

/// nx-by-ny cells over [x0,x1]x[y0,y1], each cut into two triangles.
Mesh structured_rectangle(int nx, int ny, Vec2 lower, Vec2 upper, DiagonalPattern pattern,
                          const BoundaryRule &rule);

struct MeshStatistics {
  static constexpr int kHistogramBins = 19;
  int num_triangles = 0;
  int num_vertices = 0;
  int num_edges = 0;
  int num_boundary_edges = 0;
  double h_max = 0.0;
  double min_aspect_ratio = 0.0;
  double max_aspect_ratio = 0.0;
  /// Triangle counts per equal sub-interval of [0, 1].
  std::array<int, kHistogramBins> aspect_histogram{};
};

MeshStatistics mesh_statistics(const Mesh &mesh);
void write_statistics_csv(const MeshStatistics &stats, std::ostream &out);

// Plain-text mesh format:
//   vertices <n>        followed by n lines "x y"
//   triangles <m>       followed by m lines "a b c"   (0-based)
//   boundary <k>        followed by k lines "a b D|N"
// Lines starting with '#' are ignored.
Mesh read_mesh(std::istream &in);
Mesh read_mesh_file(const std::string &path);
void write_mesh(const Mesh &mesh, std::ostream &out);
void write_mesh_file(const Mesh &mesh, const std::string &path);

}  // namespace rtstokes
