#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

#include "gpwaves/field.hpp"

namespace gpwaves {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Real degrees of freedom of the boundary-vanishing test space: two per interior sample,
/// (Re, Im) interleaved in storage order.
struct DofMap {
  std::vector<Index> points;     ///< interior flat index of each dof pair
  std::vector<Index> pair_of;    ///< dof pair of each grid sample, -1 on the Dirichlet boundary
  Index size() const { return 2 * static_cast<Index>(points.size()); }
};

DofMap make_dof_map(const Grid& g);

/// Interior samples of `f` as a real vector.
Eigen::VectorXd to_dofs(const Field& f, const DofMap& map);

/// Field with the given interior dofs; boundary samples set to `boundary`.
Field from_dofs(const Grid& g, const DofMap& map, const Eigen::VectorXd& x, Complex boundary = Complex(0, 0));

/// The matrix of hessian_apply(base, c, .) on the dof space (per unit cell volume). Symmetric.
SparseMatrix assemble_hessian(const Field& base, double c, const DofMap& map);

/// Scalar -Lap_h + 1 on interior samples (one row per dof pair).
SparseMatrix assemble_shifted_laplacian(const Grid& g, const DofMap& map);

/// Solves with -Lap_h + 1 on the real and imaginary parts; used to turn L2 gradients into H1
/// gradients and to measure H1 inner products on the test space.
class SobolevPreconditioner {
 public:
  explicit SobolevPreconditioner(const Grid& g);

  /// (-Lap_h + 1)^{-1} applied to the interior samples of r; boundary samples of the result are 0.
  Field apply(const Field& r) const;

  /// Discrete H1 inner product h^d sum over interior samples of <a, (-Lap_h + 1) b>, for fields
  /// vanishing on the boundary.
  double inner(const Field& a, const Field& b) const;

  const DofMap& dofs() const { return map_; }

 private:
  Grid grid_;
  DofMap map_;
  SparseMatrix op_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

/// Symmetric positive definite preconditioner L |D| L^T built from the LDL^T factorization of a
/// symmetric indefinite matrix. Exposes the interface Eigen's iterative solvers expect.
class AbsLdltPreconditioner {
 public:
  using StorageIndex = SparseMatrix::StorageIndex;
  AbsLdltPreconditioner() = default;

  /// Factor `a` (plus `shift` on the diagonal). Throws NonConvergence on a failed factorization.
  void factor(const SparseMatrix& a, double shift = 0.0);

  template <typename M>
  AbsLdltPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  AbsLdltPreconditioner& factorize(const M&) { return *this; }
  template <typename M>
  AbsLdltPreconditioner& compute(const M&) { return *this; }
  Eigen::ComputationInfo info() const { return ldlt_ ? Eigen::Success : Eigen::InvalidInput; }

  template <typename Rhs>
  Eigen::VectorXd solve(const Rhs& b) const { return apply(Eigen::VectorXd(b)); }
  Eigen::VectorXd apply(const Eigen::VectorXd& b) const;

  /// Number of negative pivots of the factored matrix.
  Index negative_pivots() const;

 private:
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
  Eigen::VectorXd inv_abs_d_;
};

struct LinearSolveStats {
  Index iterations = 0;
  double relative_residual = 0;  ///< true ||A x - b|| / ||b||
};

/// Minimum-residual solve of the symmetric (possibly indefinite) system a x = b.
Eigen::VectorXd minres_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const AbsLdltPreconditioner& m,
                             double rel_tol, Index max_iters, LinearSolveStats* stats = nullptr);

}  // namespace gpwaves
