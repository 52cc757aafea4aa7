#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rtstokes/fespace.hpp"
#include "rtstokes/mesh.hpp"
#include "rtstokes/sparse.hpp"

namespace rtstokes {

using ElementGram = Eigen::Matrix<double, 8, 8>;
using ElementDivergence = Eigen::Matrix<double, 3, 8>;

/// (phi_n, phi_m)_{Q,E} for the eight local basis functions, taken with the
/// vertex/centroid rule.
ElementGram element_gram_q(const Rt1Space &space, int t);
/// (lambda_l, div phi_m)_E with the edge-midpoint rule (exact here).
ElementDivergence element_divergence(const Rt1Space &space, int t);
/// P1 mass matrix |E|/12 [2 1 1; 1 2 1; 1 1 2].
Eigen::Matrix3d element_mass(const Mesh &mesh, int t);

/// Global B with B(l, k) = (w_l, div phi_k), size 3N_T x K.
CsrMatrix assemble_divergence(const Rt1Space &space);
/// Global block-diagonal P1 mass matrix.
CsrMatrix assemble_mass(const Mesh &mesh);

/// Mask over V_h with 1 at the edge DOFs of boundary edges of `kind`.
std::vector<char> essential_mask(const Rt1Space &space, BoundaryKind kind);

/// Flux DOFs meeting at one vertex or one centroid. The quadrature rule
/// decouples them from every other DOF, so they are eliminated together.
struct LocalBlock {
  int owner = -1;  ///< vertex index, or element index when `centroid`
  bool centroid = false;
  std::vector<int> free;       ///< unconstrained global V_h DOFs
  std::vector<int> essential;  ///< constrained global V_h DOFs
  Eigen::MatrixXd a;           ///< coeff * Gram, free x free
  Eigen::MatrixXd a_fk;        ///< coeff * Gram, free x essential
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::vector<int> cells;      ///< W_h DOFs of the elements touching the owner
  Eigen::MatrixXd coupling;    ///< free x cells, entries (w_l, div phi_k)
};

/// One block per mesh vertex followed by one per element centroid. Throws
/// SolverError when a block is not positive definite.
std::vector<LocalBlock> build_local_blocks(const Rt1Space &space, double coeff,
                                           const std::vector<char> &essential);

/// Reduced cell system for the saddle problem
///   A S - B^T U = G,   B S + D U = R,
/// with A = coeff * Gram_Q, D = mass_weight * M and the essential DOFs of S
/// prescribed. The eliminated matrix D + B A^{-1} B^T couples an element
/// only to elements sharing a vertex with it.
class SchurOperator {
 public:
  /// `pinned` >= 0 replaces that row and column by the identity, which fixes
  /// the constant mode when no pressure boundary exists.
  SchurOperator(const Rt1Space &space, double coeff, double mass_weight, BoundaryKind essential, int pinned = -1);

  const CsrMatrix &matrix() const { return matrix_; }
  const CsrMatrix &divergence() const { return b_; }
  const std::vector<LocalBlock> &blocks() const { return blocks_; }
  bool is_essential(int dof) const { return essential_[dof] != 0; }
  const std::vector<char> &essential() const { return essential_; }
  int pinned() const { return pinned_; }
  double coeff() const { return coeff_; }
  double mass_weight() const { return mass_weight_; }

  /// R - B y with y = A^{-1}(G - A_fk S_k) on free DOFs and y = S_k on the
  /// essential ones. `g` and `essential_values` have length K; entries at
  /// essential (resp. free) positions are ignored.
  std::vector<double> reduced_rhs(std::span<const double> r, std::span<const double> g,
                                  std::span<const double> essential_values) const;

  /// Recovers S from the cell unknowns.
  std::vector<double> back_substitute(std::span<const double> u, std::span<const double> g,
                                      std::span<const double> essential_values) const;

 private:
  std::vector<char> essential_;
  std::vector<LocalBlock> blocks_;
  CsrMatrix b_;
  CsrMatrix matrix_;
  double coeff_, mass_weight_;
  int pinned_;
  int num_vh_;
};

inline SchurOperator assemble_schur(const Rt1Space &space, double coeff, double mass_weight, BoundaryKind essential,
                                    int pinned = -1) {
  return SchurOperator(space, coeff, mass_weight, essential, pinned);
}

}  // namespace rtstokes
