#include "gpwaves/sparse_hessian.hpp"

#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>

#include "gpwaves/errors.hpp"

namespace gpwaves {

DofMap make_dof_map(const Grid& g) {
  DofMap m;
  m.pair_of.assign(static_cast<std::size_t>(g.size()), -1);
  for (Index p = 0; p < g.size(); ++p) {
    if (g.on_dirichlet_boundary(p)) continue;
    m.pair_of[static_cast<std::size_t>(p)] = static_cast<Index>(m.points.size());
    m.points.push_back(p);
  }
  return m;
}

Eigen::VectorXd to_dofs(const Field& f, const DofMap& map) {
  Eigen::VectorXd x(map.size());
  for (std::size_t k = 0; k < map.points.size(); ++k) {
    const Complex z = f[map.points[k]];
    x[2 * static_cast<Index>(k)] = z.real();
    x[2 * static_cast<Index>(k) + 1] = z.imag();
  }
  return x;
}

Field from_dofs(const Grid& g, const DofMap& map, const Eigen::VectorXd& x, Complex boundary) {
  if (x.size() != map.size()) throw ContractViolation("from_dofs: vector size does not match the dof map");
  Field f = Field::constant(g, boundary);
  for (std::size_t k = 0; k < map.points.size(); ++k) {
    f[map.points[k]] = Complex(x[2 * static_cast<Index>(k)], x[2 * static_cast<Index>(k) + 1]);
  }
  return f;
}

SparseMatrix assemble_hessian(const Field& base, double c, const DofMap& map) {
  const Grid& g = base.grid();
  const double inv_h2 = 1.0 / (g.spacing * g.spacing);
  const double cross = c / (2 * g.spacing);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(map.points.size() * static_cast<std::size_t>(4 + 8 * g.dim));
  for (std::size_t k = 0; k < map.points.size(); ++k) {
    const Index p = map.points[k];
    const Index r = 2 * static_cast<Index>(k);
    const auto idx = g.unflatten(p);
    const Complex psi = base[p];
    const double pot = 1 - std::norm(psi);
    const double diag = 2.0 * g.dim * inv_h2 - pot;
    // 2 psi psi^T from the projection term
    trip.emplace_back(r, r, diag + 2 * psi.real() * psi.real());
    trip.emplace_back(r + 1, r + 1, diag + 2 * psi.imag() * psi.imag());
    trip.emplace_back(r, r + 1, 2 * psi.real() * psi.imag());
    trip.emplace_back(r + 1, r, 2 * psi.real() * psi.imag());
    for (int a = 0; a < g.dim; ++a) {
      for (int dir : {+1, -1}) {
        const Index q = g.neighbor(idx, a, dir);
        if (q < 0) continue;
        const Index pair = map.pair_of[static_cast<std::size_t>(q)];
        if (pair < 0) continue;
        const Index s = 2 * pair;
        trip.emplace_back(r, s, -inv_h2);
        trip.emplace_back(r + 1, s + 1, -inv_h2);
        if (a == 0) {
          // -i c D1: the x1 neighbor in direction dir carries -dir (c/2h) J, J = [[0,-1],[1,0]]
          const double j = -dir * cross;
          trip.emplace_back(r, s + 1, -j);
          trip.emplace_back(r + 1, s, j);
        }
      }
    }
  }
  SparseMatrix h(map.size(), map.size());
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

SparseMatrix assemble_shifted_laplacian(const Grid& g, const DofMap& map) {
  const double inv_h2 = 1.0 / (g.spacing * g.spacing);
  const Index n = static_cast<Index>(map.points.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(map.points.size() * static_cast<std::size_t>(1 + 2 * g.dim));
  for (Index k = 0; k < n; ++k) {
    const Index p = map.points[static_cast<std::size_t>(k)];
    const auto idx = g.unflatten(p);
    trip.emplace_back(k, k, 2.0 * g.dim * inv_h2 + 1.0);
    for (int a = 0; a < g.dim; ++a) {
      for (int dir : {+1, -1}) {
        const Index q = g.neighbor(idx, a, dir);
        if (q < 0) continue;
        const Index pair = map.pair_of[static_cast<std::size_t>(q)];
        if (pair >= 0) trip.emplace_back(k, pair, -inv_h2);
      }
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SobolevPreconditioner::SobolevPreconditioner(const Grid& g)
    : grid_(g), map_(make_dof_map(g)), op_(assemble_shifted_laplacian(g, map_)) {
  llt_.compute(op_);
  if (llt_.info() != Eigen::Success) throw NonConvergence("Sobolev preconditioner factorization failed");
}

Field SobolevPreconditioner::apply(const Field& r) const {
  const Index n = static_cast<Index>(map_.points.size());
  Eigen::MatrixXd rhs(n, 2);
  for (Index k = 0; k < n; ++k) {
    const Complex z = r[map_.points[static_cast<std::size_t>(k)]];
    rhs(k, 0) = z.real();
    rhs(k, 1) = z.imag();
  }
  const Eigen::MatrixXd sol = llt_.solve(rhs);
  Field out(grid_);
  for (Index k = 0; k < n; ++k) out[map_.points[static_cast<std::size_t>(k)]] = Complex(sol(k, 0), sol(k, 1));
  return out;
}

double SobolevPreconditioner::inner(const Field& a, const Field& b) const {
  const Index n = static_cast<Index>(map_.points.size());
  Eigen::MatrixXd av(n, 2), bv(n, 2);
  for (Index k = 0; k < n; ++k) {
    const Complex za = a[map_.points[static_cast<std::size_t>(k)]];
    const Complex zb = b[map_.points[static_cast<std::size_t>(k)]];
    av(k, 0) = za.real();
    av(k, 1) = za.imag();
    bv(k, 0) = zb.real();
    bv(k, 1) = zb.imag();
  }
  const Eigen::MatrixXd ob = op_ * bv;
  return grid_.cell_volume() * (av.col(0).dot(ob.col(0)) + av.col(1).dot(ob.col(1)));
}

void AbsLdltPreconditioner::factor(const SparseMatrix& a, double shift) {
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
  if (shift != 0.0) {
    SparseMatrix id(a.rows(), a.cols());
    id.setIdentity();
    ldlt->compute(a + shift * id);
  } else {
    ldlt->compute(a);
  }
  if (ldlt->info() != Eigen::Success) throw NonConvergence("LDL^T factorization failed");
  const Eigen::VectorXd d = ldlt->vectorD();
  const double floor = 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());
  inv_abs_d_ = d.cwiseAbs().cwiseMax(floor).cwiseInverse();
  ldlt_ = std::move(ldlt);
}

Eigen::VectorXd AbsLdltPreconditioner::apply(const Eigen::VectorXd& b) const {
  if (!ldlt_) throw ContractViolation("preconditioner used before factor()");
  Eigen::VectorXd y = ldlt_->permutationP() * b;
  ldlt_->matrixL().solveInPlace(y);
  y = inv_abs_d_.asDiagonal() * y;
  ldlt_->matrixU().solveInPlace(y);
  return ldlt_->permutationPinv() * y;
}

Index AbsLdltPreconditioner::negative_pivots() const {
  if (!ldlt_) throw ContractViolation("negative_pivots used before factor()");
  return (ldlt_->vectorD().array() < 0).count();
}

Eigen::VectorXd minres_solve(const SparseMatrix& a, const Eigen::VectorXd& b, const AbsLdltPreconditioner& m,
                             double rel_tol, Index max_iters, LinearSolveStats* stats) {
  Eigen::MINRES<SparseMatrix, Eigen::Lower | Eigen::Upper, AbsLdltPreconditioner> solver;
  solver.preconditioner() = m;
  solver.setTolerance(rel_tol);
  solver.setMaxIterations(max_iters);
  solver.compute(a);
  // Eigen's stopping test uses the preconditioned residual estimate; restart from the current
  // iterate until the true residual meets the tolerance.
  const double bn = b.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Index total = 0;
  double rel = bn > 0 ? 1.0 : 0.0;
  for (int restart = 0; restart < 6 && rel > rel_tol && total < max_iters; ++restart) {
    x = solver.solveWithGuess(b, x);
    total += solver.iterations();
    rel = (a * x - b).norm() / bn;
    solver.setTolerance(std::max(solver.tolerance() * 0.1, 1e-15));
  }
  if (stats) {
    stats->iterations = total;
    stats->relative_residual = rel;
  }
  return x;
}

}  // namespace gpwaves
