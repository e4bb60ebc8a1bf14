#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpwaves/analysis.hpp"
#include "gpwaves/errors.hpp"
#include "gpwaves/field.hpp"
#include "gpwaves/functionals.hpp"

namespace gpwaves {

struct SolverConfig {
  double c = 0.9;
  int dim = 2;
  double N = 12;
  double M = 12;
  double h = 0.1;
  TransverseBc bc = TransverseBc::dirichlet_one;
  Index path_nodes = 33;
  double descent_tol = 1e-3;
  double newton_tol = 1e-9;
  Index max_descent_iters = 20000;
  Index max_newton_iters = 30;
  /// Initial vortex separation of the endpoint construction, in units of the healing length.
  double seed_amplitude = 2.0;
  std::uint64_t rng_seed = 1;
  bool compute_morse = true;

  /// Throws ConfigError on an inadmissible configuration.
  void validate() const;
  Grid grid() const;
};

/// A non-convergence that carries the best field found so far.
class SolverNonConvergence : public NonConvergence {
 public:
  SolverNonConvergence(const std::string& what, Field best) : NonConvergence(what), best_(std::move(best)) {}
  const Field& best() const { return best_; }

 private:
  Field best_;
};

/// Discrete path from the constant 1 to an endpoint with negative Lagrangian.
class Path {
 public:
  /// Throws ContractViolation unless there are at least 3 nodes on one grid, node 0 is exactly 1
  /// and the endpoint has I^c < 0.
  Path(std::vector<Field> nodes, double c);

  const std::vector<Field>& nodes() const { return nodes_; }
  std::vector<Field>& mutable_nodes() { return nodes_; }
  Index size() const { return static_cast<Index>(nodes_.size()); }
  double c() const { return c_; }
  const Grid& grid() const { return nodes_.front().grid(); }

  /// Straight path 1 + t (endpoint - 1) with `count` equally spaced nodes.
  static Path straight(const Field& endpoint, double c, Index count);
  /// Polyline 1 -> via -> endpoint; `via` sits at the middle node.
  static Path through(const Field& via, const Field& endpoint, double c, Index count);

 private:
  std::vector<Field> nodes_;
  double c_;
};

/// 1 + chi (psi_pair - 1): a windowed vortex pair (a vortex ring in 3-D) of separation d with
/// positive momentum. d starts at seed_amplitude and grows by 1.5 until I^c < -0.1; when the box
/// cannot hold such a pair, the widest admissible one is relaxed by H1 descent on I^c until
/// I^c < -0.1. Throws ConfigError unless 0 < c < sqrt 2 and dim >= 2; throws NonConvergence,
/// naming the sign of the momentum, when neither step reaches I^c < -0.1.
Field construct_endpoint(double c, const Grid& g, double seed_amplitude, double* separation = nullptr);

/// Path with midpoints inserted (linear interpolation) wherever adjacent-node Lagrangians
/// differ by more than 10% of the current maximum.
Path refine_path(const Path& path);

/// Max of I^c over the nodes of refine_path(path).
double gamma_estimate(const Path& path);

struct DescentStats {
  Index iterations = 0;
  Index reparametrizations = 0;
  Index line_search_failures = 0;
  double final_residual = 0;
  bool max_never_increased = true;  ///< checked after every descent step
  std::vector<double> max_before_step;  ///< path maximum before each descent step
  std::vector<double> max_history;      ///< path maximum after each descent step
};

/// Deforms the path by moving its highest node along the H1 gradient of I^c with the path
/// tangent projected out (Armijo backtracking from 0.5). Nodes are re-equidistributed in H1
/// arclength every 20 iterations. Returns the highest node once its residual max-norm is at most
/// descent_tol; throws SolverNonConvergence with that node after max_descent_iters.
Field mountain_pass_descend(Path& path, const SolverConfig& config, DescentStats* stats = nullptr);

struct NewtonStats {
  Index iterations = 0;
  Index linear_iterations = 0;
  std::vector<double> residual_history;  ///< max-norm before each step and at the end
  bool trivial = false;                  ///< converged to the constant (energy <= 1e-8)
};

/// Newton iteration on the discrete Euler-Lagrange map, holding the Dirichlet data of the
/// candidate fixed. Linear systems are solved by MINRES (relative tolerance 1e-6) preconditioned
/// with |LDL^T| of the Hessian regularized by 1e-8. Stops at residual max-norm <= newton_tol.
/// Throws SolverNonConvergence with the last good iterate after three consecutive residual
/// increases or max_newton_iters steps.
Field newton_refine(const Field& candidate, double c, const SolverConfig& config, NewtonStats* stats = nullptr);

struct SolveReport {
  SolverConfig config;
  Field field;
  FunctionalReport functional;
  double gamma_estimate = 0;
  PohozaevResiduals pohozaev;
  std::optional<Index> morse_index;
  VortexSet vortices;
  bool converged = false;
  bool trivial = false;
  bool descent_converged = false;
  DescentStats descent;
  NewtonStats newton;
  double residual = 0;      ///< EL residual max-norm of the field
  double endpoint_separation = 0;
  double max_modulus = 0;   ///< max |psi|
  double max_deviation = 0; ///< max |1 - |psi||
  double boundary_distance_ratio = 0;  ///< distance of argmax |1 - |psi|| to the x1 ends over N
  std::vector<double> path_profile;    ///< I^c at the nodes of the final path
  std::vector<std::string> warnings;
};

/// Endpoint, path, descent, Newton refinement and diagnostics. With a warm start the initial path
/// runs 1 -> warm_start -> endpoint. Non-convergence is reported, not thrown, once a candidate
/// exists.
SolveReport solve(const SolverConfig& config, const Field* warm_start = nullptr);

struct SweepRow {
  double c = 0;
  double N = 0;
  double gamma = 0;
  double sigma = 0;
  double energy = 0;
  double momentum = 0;
  double lagrangian = 0;
  std::optional<Index> morse_index;
  bool converged = false;
  std::vector<std::string> flags;
  std::string error;
};

struct SweepTable {
  std::vector<SweepRow> rows;  ///< ordered by (c, N)
};

/// Continuation in c (warm start from the previous converged solution) for every N; chains for
/// different N run on up to `threads` threads. Flags sigma increases above 2% between
/// consecutive c at fixed N and energy variation above 10% across N at fixed c. Cell failures are
/// recorded in the row.
SweepTable sweep(const std::vector<double>& c_values, const std::vector<double>& N_values, const SolverConfig& base,
                 int threads = 1);

/// Smooth seeded perturbation vanishing on the Dirichlet boundary with max-norm `amplitude`.
Field seeded_perturbation(const Grid& g, std::uint64_t seed, double amplitude);

}  // namespace gpwaves
