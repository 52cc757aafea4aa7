#include "rtstokes/assembly.hpp"

#include <algorithm>
#include <string>

#include "rtstokes/error.hpp"
#include "rtstokes/quadrature.hpp"

namespace rtstokes {

ElementGram element_gram_q(const Rt1Space &space, int t) {
  const Mesh &mesh = space.mesh();
  const QuadratureRule &rule = mfmfe_rule();
  ElementGram g = ElementGram::Zero();
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Vec2 x = map_to_element(mesh, t, rule.nodes[q]);
    std::array<Vec2, 8> phi;
    for (int m = 0; m < 8; ++m) phi[m] = space.eval_basis(t, m, x);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) g(i, j) += rule.weights[q] * dot(phi[i], phi[j]);
  }
  return mesh.triangle(t).area * g;
}

ElementDivergence element_divergence(const Rt1Space &space, int t) {
  const Mesh &mesh = space.mesh();
  const QuadratureRule &rule = midpoint_rule();
  ElementDivergence b = ElementDivergence::Zero();
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const Vec2 &r = rule.nodes[q];
    const Vec2 x = map_to_element(mesh, t, r);
    const std::array<double, 3> lam = {1.0 - r.x - r.y, r.x, r.y};
    for (int m = 0; m < 8; ++m) {
      const double d = rule.weights[q] * space.eval_div(t, m, x);
      for (int l = 0; l < 3; ++l) b(l, m) += lam[l] * d;
    }
  }
  return mesh.triangle(t).area * b;
}

Eigen::Matrix3d element_mass(const Mesh &mesh, int t) {
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return (mesh.triangle(t).area / 12.0) * m;
}

CsrMatrix assemble_divergence(const Rt1Space &space) {
  const Mesh &mesh = space.mesh();
  std::vector<CsrMatrix::Triplet> trip;
  trip.reserve(24 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementDivergence b = element_divergence(space, t);
    const auto &dofs = space.dofs().element_dofs(t);
    for (int l = 0; l < 3; ++l)
      for (int m = 0; m < 8; ++m) trip.push_back({DofMap::wh_dof(t, l), dofs[m], b(l, m)});
  }
  return CsrMatrix::from_triplets(space.dofs().num_wh(), space.dofs().num_vh(), std::move(trip));
}

CsrMatrix assemble_mass(const Mesh &mesh) {
  std::vector<CsrMatrix::Triplet> trip;
  trip.reserve(9 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Eigen::Matrix3d m = element_mass(mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.push_back({3 * t + i, 3 * t + j, m(i, j)});
  }
  return CsrMatrix::from_triplets(3 * mesh.num_triangles(), 3 * mesh.num_triangles(), std::move(trip));
}

std::vector<char> essential_mask(const Rt1Space &space, BoundaryKind kind) {
  const Mesh &mesh = space.mesh();
  std::vector<char> mask(space.dofs().num_vh(), 0);
  if (kind == BoundaryKind::Interior) return mask;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge(e).kind != kind) continue;
    mask[DofMap::edge_dof(e, 0)] = 1;
    mask[DofMap::edge_dof(e, 1)] = 1;
  }
  return mask;
}

namespace {

// Gathers the block members at one node: `members` are global DOFs, and
// for every incident element the local indices m that land in the block.
struct NodeStencil {
  std::vector<int> members;
  std::vector<int> elements;
  std::vector<std::array<int, 2>> local;  // local DOFs of each element
};

void finish_block(LocalBlock &blk, const NodeStencil &st, const std::vector<char> &essential,
                  const std::vector<ElementGram> &gram, const std::vector<ElementDivergence> &div,
                  const DofMap &dofs, double coeff) {
  for (int g : st.members) (essential[g] ? blk.essential : blk.free).push_back(g);
  const auto pos_of = [](const std::vector<int> &list, int g) {
    const auto it = std::find(list.begin(), list.end(), g);
    return it == list.end() ? -1 : static_cast<int>(it - list.begin());
  };
  const int nf = static_cast<int>(blk.free.size());
  const int nk = static_cast<int>(blk.essential.size());
  const int nc = 3 * static_cast<int>(st.elements.size());
  blk.a = Eigen::MatrixXd::Zero(nf, nf);
  blk.a_fk = Eigen::MatrixXd::Zero(nf, nk);
  blk.coupling = Eigen::MatrixXd::Zero(nf, nc);
  blk.cells.resize(nc);

  for (std::size_t s = 0; s < st.elements.size(); ++s) {
    const int t = st.elements[s];
    for (int l = 0; l < 3; ++l) blk.cells[3 * s + l] = DofMap::wh_dof(t, l);
    const auto &edofs = dofs.element_dofs(t);
    for (int mi : st.local[s]) {
      const int fi = pos_of(blk.free, edofs[mi]);
      if (fi < 0) continue;
      for (int mj : st.local[s]) {
        const int gj = edofs[mj];
        if (const int fj = pos_of(blk.free, gj); fj >= 0)
          blk.a(fi, fj) += coeff * gram[t](mi, mj);
        else
          blk.a_fk(fi, pos_of(blk.essential, gj)) += coeff * gram[t](mi, mj);
      }
      for (int l = 0; l < 3; ++l) blk.coupling(fi, 3 * s + l) = div[t](l, mi);
    }
  }
  // Symmetrize away rounding so the factor and the Schur entries are exact mirrors.
  blk.a = 0.5 * (blk.a + blk.a.transpose()).eval();
  if (nf > 0) {
    blk.llt.compute(blk.a);
    if (blk.llt.info() != Eigen::Success)
      throw SolverError(std::string("local flux block at ") + (blk.centroid ? "centroid " : "vertex ") +
                        std::to_string(blk.owner) + " is not positive definite");
  }
}

}  // namespace

std::vector<LocalBlock> build_local_blocks(const Rt1Space &space, double coeff, const std::vector<char> &essential) {
  if (!(coeff > 0.0)) throw InvalidArgument("local block coefficient must be positive");
  const Mesh &mesh = space.mesh();
  const DofMap &dofs = space.dofs();
  if (static_cast<int>(essential.size()) != dofs.num_vh()) throw InvalidArgument("essential mask has wrong length");

  std::vector<ElementGram> gram(mesh.num_triangles());
  std::vector<ElementDivergence> div(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    gram[t] = element_gram_q(space, t);
    div[t] = element_divergence(space, t);
  }

  std::vector<LocalBlock> blocks(mesh.num_vertices() + mesh.num_triangles());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    NodeStencil st;
    for (int e : mesh.vertex_edges(v)) st.members.push_back(DofMap::edge_dof(e, mesh.edge(e).v[0] == v ? 0 : 1));
    for (int t : mesh.vertex_triangles(v)) {
      const Triangle &tri = mesh.triangle(t);
      const int k = static_cast<int>(std::find(tri.v.begin(), tri.v.end(), v) - tri.v.begin());
      st.elements.push_back(t);
      st.local.push_back({2 * k, 2 * k + 1});
    }
    LocalBlock &blk = blocks[v];
    blk.owner = v;
    finish_block(blk, st, essential, gram, div, dofs, coeff);
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    NodeStencil st;
    st.members = {dofs.centroid_dof(t, 0), dofs.centroid_dof(t, 1)};
    st.elements = {t};
    st.local = {{6, 7}};
    LocalBlock &blk = blocks[mesh.num_vertices() + t];
    blk.owner = t;
    blk.centroid = true;
    finish_block(blk, st, essential, gram, div, dofs, coeff);
  }
  return blocks;
}

SchurOperator::SchurOperator(const Rt1Space &space, double coeff, double mass_weight, BoundaryKind essential,
                             int pinned)
    : essential_(essential_mask(space, essential)),
      blocks_(build_local_blocks(space, coeff, essential_)),
      b_(assemble_divergence(space)),
      coeff_(coeff),
      mass_weight_(mass_weight),
      pinned_(pinned),
      num_vh_(space.dofs().num_vh()) {
  const Mesh &mesh = space.mesh();
  const int n = space.dofs().num_wh();
  if (mass_weight < 0.0) throw InvalidArgument("mass weight must be nonnegative");
  if (pinned >= n) throw InvalidArgument("pinned DOF out of range");

  std::vector<CsrMatrix::Triplet> trip;
  if (mass_weight > 0.0) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const Eigen::Matrix3d m = mass_weight * element_mass(mesh, t);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.push_back({3 * t + i, 3 * t + j, m(i, j)});
    }
  }
  for (const LocalBlock &blk : blocks_) {
    if (blk.free.empty()) continue;
    const Eigen::MatrixXd x = blk.llt.solve(blk.coupling);
    Eigen::MatrixXd s = blk.coupling.transpose() * x;
    s = 0.5 * (s + s.transpose()).eval();
    for (std::size_t i = 0; i < blk.cells.size(); ++i)
      for (std::size_t j = 0; j < blk.cells.size(); ++j) trip.push_back({blk.cells[i], blk.cells[j], s(i, j)});
  }
  if (pinned_ >= 0) {
    std::erase_if(trip, [p = pinned_](const CsrMatrix::Triplet &e) { return e.row == p || e.col == p; });
    trip.push_back({pinned_, pinned_, 1.0});
  }
  matrix_ = CsrMatrix::from_triplets(n, n, std::move(trip));
}

std::vector<double> SchurOperator::reduced_rhs(std::span<const double> r, std::span<const double> g,
                                               std::span<const double> essential_values) const {
  std::vector<double> y(num_vh_, 0.0);
  for (const LocalBlock &blk : blocks_) {
    for (int k : blk.essential) y[k] = essential_values[k];
    if (blk.free.empty()) continue;
    Eigen::VectorXd rhs(blk.free.size());
    for (std::size_t i = 0; i < blk.free.size(); ++i) rhs[i] = g[blk.free[i]];
    for (std::size_t j = 0; j < blk.essential.size(); ++j) rhs -= blk.a_fk.col(j) * essential_values[blk.essential[j]];
    const Eigen::VectorXd sol = blk.llt.solve(rhs);
    for (std::size_t i = 0; i < blk.free.size(); ++i) y[blk.free[i]] = sol[i];
  }
  std::vector<double> out = b_.multiply(y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] - out[i];
  if (pinned_ >= 0) out[pinned_] = 0.0;
  return out;
}

std::vector<double> SchurOperator::back_substitute(std::span<const double> u, std::span<const double> g,
                                                   std::span<const double> essential_values) const {
  std::vector<double> s(num_vh_, 0.0);
  for (const LocalBlock &blk : blocks_) {
    for (int k : blk.essential) s[k] = essential_values[k];
    if (blk.free.empty()) continue;
    Eigen::VectorXd cells(blk.cells.size());
    for (std::size_t j = 0; j < blk.cells.size(); ++j) cells[j] = u[blk.cells[j]];
    Eigen::VectorXd rhs = blk.coupling * cells;
    for (std::size_t i = 0; i < blk.free.size(); ++i) rhs[i] += g[blk.free[i]];
    for (std::size_t j = 0; j < blk.essential.size(); ++j) rhs -= blk.a_fk.col(j) * essential_values[blk.essential[j]];
    const Eigen::VectorXd sol = blk.llt.solve(rhs);
    for (std::size_t i = 0; i < blk.free.size(); ++i) s[blk.free[i]] = sol[i];
  }
  return s;
}

}  // namespace rtstokes
