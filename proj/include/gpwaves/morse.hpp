#pragma once

#include <string>
#include <vector>

#include "gpwaves/field.hpp"
#include "gpwaves/onedim.hpp"

namespace gpwaves {

enum class SpectrumMethod { dense_factorization, sparse_factorization };

std::string to_string(SpectrumMethod m);

struct SpectrumReport {
  Index negative_count = 0;
  std::vector<double> smallest_eigs;  ///< ascending, at most 10
  double shift_used = 0;              ///< the cutoff
  SpectrumMethod method = SpectrumMethod::dense_factorization;
  Index dimension = 0;
  Index count_below_lower = 0;  ///< eigenvalues below cutoff - 1e-8
  Index count_below_upper = 0;  ///< eigenvalues below cutoff + 1e-8
  bool eigs_converged = true;
  std::string warning;
};

struct MorseOptions {
  double cutoff = 0;
  /// Largest matrix dimension handled by a dense eigendecomposition; above it the count comes
  /// from the inertia of a sparse LDL^T factorization.
  Index dense_limit = 2500;
  Index eig_count = 10;
};

/// Number of eigenvalues below the cutoff of the Hessian of I^c at f on the test space vanishing
/// on the Dirichlet boundary. The Hessian is taken per unit cell volume; its symmetry is checked
/// with random vectors before any eigen computation (ContractViolation on failure).
SpectrumReport morse_index(const Field& f, double c, const MorseOptions& opt = {});

/// The `count` smallest eigenvalues of the Hessian (ascending) by Lanczos on (H + alpha)^{-1}
/// with full reorthogonalization, where alpha = 1 + c^2/4 + 0.05 bounds H from below.
std::vector<double> smallest_hessian_eigs(const Field& f, double c, Index count, bool* converged = nullptr);

/// e^{i omega0 s} eta(stretch (s - start)) on [start, start + conjugate_spacing / stretch] and 0
/// elsewhere, as a function of x1. stretch < 1 lengthens the support past one conjugate interval,
/// which makes the second variation negative.
Field conjugate_test_function(const Grid& g, const CircularParams& p, double start, double stretch = 0.75);

struct CircularScanRow {
  double length = 0;
  Index predicted = 0;  ///< floor(L mu / 2 pi) - 1
  Index computed = 0;
  bool meets_bound = false;  ///< computed >= predicted - 1
};

/// Morse counts of the circular wave on 1-D line grids of length L (spacing h). Throws
/// DomainError outside the oscillatory regime.
std::vector<CircularScanRow> circular_index_scan(const CircularParams& p, const std::vector<double>& lengths,
                                                 double h = 0.1);

}  // namespace gpwaves
