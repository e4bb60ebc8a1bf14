#include "gpwaves/morse.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gpwaves/errors.hpp"
#include "gpwaves/functionals.hpp"
#include "gpwaves/sparse_hessian.hpp"

namespace gpwaves {

std::string to_string(SpectrumMethod m) {
  return m == SpectrumMethod::dense_factorization ? "dense_factorization" : "sparse_factorization";
}

namespace {

constexpr double kSensitivity = 1e-8;

Eigen::VectorXd random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

// Bilinear symmetry of the matrix-free Hessian and agreement of the assembled matrix with it.
void check_symmetry(const Field& f, double c, const DofMap& map, const SparseMatrix& h) {
  const Grid& g = f.grid();
  const Eigen::VectorXd x = random_vector(map.size(), 11);
  const Eigen::VectorXd y = random_vector(map.size(), 12);
  const Field fx = from_dofs(g, map, x);
  const Field fy = from_dofs(g, map, y);
  const Field hx = hessian_apply(f, c, fx);
  const Field hy = hessian_apply(f, c, fy);
  const double a = real_pairing(hx, fy);
  const double b = real_pairing(fx, hy);
  const Eigen::VectorXd hx_dofs = to_dofs(hx, map);
  const double scale = g.cell_volume() * hx_dofs.norm() * y.norm();
  if (std::abs(a - b) > 1e-10 * scale) throw ContractViolation("Hessian failed the bilinear symmetry check");
  if ((h * x - hx_dofs).norm() > 1e-10 * hx_dofs.norm()) {
    throw ContractViolation("assembled Hessian disagrees with hessian_apply");
  }
}

Index count_below(const Eigen::VectorXd& eigs, double cutoff) { return (eigs.array() < cutoff).count(); }

Index inertia_below(const SparseMatrix& h, double cutoff) {
  AbsLdltPreconditioner ldlt;
  ldlt.factor(h, -cutoff);
  return ldlt.negative_pivots();
}

std::vector<double> lanczos_smallest(const SparseMatrix& h, double alpha, Index count, bool* converged) {
  const Index n = h.rows();
  SparseMatrix id(n, n);
  id.setIdentity();
  Eigen::SimplicialLLT<SparseMatrix> llt(h + alpha * id);
  if (llt.info() != Eigen::Success) throw NonConvergence("shifted Hessian is not positive definite");

  const Index max_steps = std::min<Index>(n, std::max<Index>(120, 6 * count));
  Eigen::MatrixXd q(n, max_steps);
  std::vector<double> diag, off;
  Eigen::VectorXd v = random_vector(n, 7);
  v.normalize();
  q.col(0) = v;
  bool done = false;
  std::vector<double> result;
  for (Index j = 0; j < max_steps; ++j) {
    Eigen::VectorXd w = llt.solve(q.col(j));
    diag.push_back(q.col(j).dot(w));
    // full reorthogonalization, twice for stability
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    const double beta = w.norm();
    const Index m = j + 1;
    const bool last = m == max_steps || beta < 1e-14;
    if (m >= count && (m % 10 == 0 || last)) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (Index i = 0; i < m; ++i) t(i, i) = diag[static_cast<std::size_t>(i)];
      for (Index i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = off[static_cast<std::size_t>(i)];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      const Index want = std::min(count, m);
      bool ok = true;
      result.clear();
      for (Index k = 0; k < want; ++k) {
        const Index col = m - 1 - k;  // largest Ritz values of the inverse
        const double theta = es.eigenvalues()[col];
        if (std::abs(beta * es.eigenvectors()(m - 1, col)) > 1e-8 * theta) ok = false;
        result.push_back(1.0 / theta - alpha);
      }
      if (ok || last) {
        done = ok;
        break;
      }
    }
    if (last) break;
    off.push_back(beta);
    q.col(j + 1) = w / beta;
  }
  if (converged) *converged = done;
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace

std::vector<double> smallest_hessian_eigs(const Field& f, double c, Index count, bool* converged) {
  const DofMap map = make_dof_map(f.grid());
  const SparseMatrix h = assemble_hessian(f, c, map);
  return lanczos_smallest(h, 1 + c * c / 4 + 0.05, count, converged);
}

SpectrumReport morse_index(const Field& f, double c, const MorseOptions& opt) {
  const DofMap map = make_dof_map(f.grid());
  if (map.size() == 0) throw ContractViolation("morse_index: the grid has no interior samples");
  const SparseMatrix h = assemble_hessian(f, c, map);
  check_symmetry(f, c, map, h);

  SpectrumReport r;
  r.shift_used = opt.cutoff;
  r.dimension = map.size();
  const Index want = std::min(opt.eig_count, r.dimension);
  if (r.dimension <= opt.dense_limit) {
    r.method = SpectrumMethod::dense_factorization;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(h), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd eigs = es.eigenvalues();
    r.negative_count = count_below(eigs, opt.cutoff);
    r.count_below_lower = count_below(eigs, opt.cutoff - kSensitivity);
    r.count_below_upper = count_below(eigs, opt.cutoff + kSensitivity);
    r.smallest_eigs.assign(eigs.data(), eigs.data() + want);
    return r;
  }
  r.method = SpectrumMethod::sparse_factorization;
  r.negative_count = inertia_below(h, opt.cutoff);
  r.count_below_lower = inertia_below(h, opt.cutoff - kSensitivity);
  r.count_below_upper = inertia_below(h, opt.cutoff + kSensitivity);
  r.smallest_eigs = lanczos_smallest(h, 1 + c * c / 4 + 0.05, want, &r.eigs_converged);
  if (!r.eigs_converged) r.warning = "smallest eigenvalues did not reach the 1e-8 tolerance";
  const auto listed = static_cast<Index>(
      std::count_if(r.smallest_eigs.begin(), r.smallest_eigs.end(), [&](double e) { return e < opt.cutoff; }));
  if (r.negative_count < want && listed != r.negative_count) {
    if (!r.warning.empty()) r.warning += "; ";
    r.warning += "inertia count and listed eigenvalues disagree";
  }
  return r;
}

Field conjugate_test_function(const Grid& g, const CircularParams& p, double start, double stretch) {
  if (!(stretch > 0)) throw ContractViolation("conjugate_test_function: stretch must be positive");
  const double length = conjugate_spacing(p) / stretch;
  return Field::sample(g, [&](double x1, double, double) {
    if (x1 <= start || x1 >= start + length) return Complex(0, 0);
    return std::polar(1.0, p.omega0 * x1) * eta_linearized(stretch * (x1 - start), p);
  });
}

std::vector<CircularScanRow> circular_index_scan(const CircularParams& p, const std::vector<double>& lengths,
                                                 double h) {
  const double mu = linearized_frequency(p);
  std::vector<CircularScanRow> rows;
  for (double length : lengths) {
    const Grid g = line_grid(length / 2, h);
    const SpectrumReport rep = morse_index(sample_circular(g, p), p.c);
    CircularScanRow row;
    row.length = length;
    row.predicted = static_cast<Index>(std::floor(length * mu / (2 * std::numbers::pi))) - 1;
    row.computed = rep.negative_count;
    row.meets_bound = row.computed >= row.predicted - 1;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gpwaves
