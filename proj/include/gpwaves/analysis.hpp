#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gpwaves/field.hpp"

namespace gpwaves {

/// psi = rho e^{i theta} on the samples where rho exceeds the threshold.
struct Lifting {
  ScalarField rho;
  ScalarField theta;
  std::vector<std::uint8_t> valid_mask;
  double threshold = 0.1;
  Index invalid_count = 0;
  Index hole_count = 0;  ///< connected components of the invalid set
  Index seed = -1;       ///< flat index the unwrap started from
};

/// Breadth-first phase unwrap from the first boundary sample (lexicographic order) whose
/// modulus exceeds `threshold`. Valid samples not reachable from it are unwrapped from their own
/// lexicographically first sample. Throws DomainError when no boundary sample qualifies.
Lifting lift(const Field& f, double threshold = 0.1);

struct WindingResult {
  int winding = 0;
  double raw = 0;  ///< sum of principal phase differences / 2 pi
  bool degenerate = false;
};

/// Winding of psi around the (x1, x2) plaquette whose lower-left corner is sample `cell`.
/// Requires dim >= 2 and a cell with in-grid upper neighbors along axes 0 and 1.
WindingResult winding(const Field& f, Index cell);

struct Ball {
  std::array<double, 3> center{0, 0, 0};
  double radius = 0;
};

struct VortexSet {
  struct Plaquette {
    Index cell = 0;
    int winding = 0;
  };
  std::vector<Plaquette> plaquettes;
  std::vector<Index> degenerate_cells;
  std::vector<Index> low_modulus_cells;  ///< 3-D: cells with a corner below low_modulus
  std::vector<Ball> balls;
  Index aggregation_rounds = 0;
  int total_winding() const;
};

/// Merge intersecting closed balls: while two balls intersect, the later one is absorbed into
/// the earlier one, which keeps its center and takes the sum of both radii.
std::vector<Ball> aggregate_balls(std::vector<Ball> balls, Index* rounds = nullptr);

/// 2-D: winding of every plaquette, nonzero ones become balls of radius `ball_radius` at the
/// cell center before aggregation. 3-D: cells with any corner modulus below `low_modulus` are
/// flagged only.
VortexSet vortex_detect(const Field& f, double ball_radius = 1.0, double low_modulus = 0.1);

struct PohozaevResiduals {
  double r1 = 0;  ///< whole-space identity; extrapolated for slab fields
  double r2 = 0;  ///< dilation identity, valid on the slab
  double scale = 0;
  bool r1_extrapolated = true;
};

/// r1 = [(d-2)/2 int |grad psi|^2 - (d-1) c P + d/4 int (1-|psi|^2)^2] / scale,
/// r2 = [(d-3) A + (d-1) B] / scale, scale = E + |c P| + 1e-10.
PohozaevResiduals pohozaev_residuals(const Field& f, double c);

struct LiftingIdentities {
  double p_lift = 0;  ///< 1/2 int (1 - rho^2) d_1 theta
  double id2 = 0;     ///< c P = int rho^2 |grad theta|^2, normalized
  double id3 = 0;     ///< int 2 rho |grad rho|^2 + rho (1-rho^2)^2 = c int rho (1-rho^2) d_1 theta + int rho (1-rho^2) |grad theta|^2
  bool approximate = false;  ///< integrals restricted to the valid mask
};

/// Momentum and lifting identities from a lifting. Each residual is (lhs - rhs) divided by
/// max(|lhs|, |rhs|, 1e-10).
LiftingIdentities lifting_momentum_identities(const Lifting& l, double c);

/// h^d times the number of samples with |psi| < r, 0 < r < 1.
double sublevel_measure(const Field& f, double r);

struct DecayFit {
  double exp_v = 0;
  double exp_u = 0;
  double width_v = 0;  ///< two standard errors of the slope
  double width_u = 0;
  Index samples = 0;
  bool underflow = false;
};

/// Least-squares slopes of log|v| and log|u - 1| against log|x| over the annulus
/// 0.4 N <= |x| <= 0.8 N.
DecayFit decay_fit(const Field& f);

}  // namespace gpwaves
