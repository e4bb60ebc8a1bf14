#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gpwaves/errors.hpp"

namespace gpwaves {

using Index = Eigen::Index;

enum class TransverseBc : std::uint8_t { dirichlet_one = 0, periodic = 1 };

inline std::string to_string(TransverseBc bc) {
  return bc == TransverseBc::periodic ? "periodic" : "dirichlet";
}

/// Uniform tensor grid on the truncated slab (-N, N) x (-M, M)^(d-1).
///
/// Axis 0 is x1 and always carries Dirichlet data. Dirichlet axes sample both end points, so
/// (count - 1) * h spans the axis; periodic axes sample [-M, M) and count * h spans it. Unused
/// axes have count 1 so that every loop can run over three axes. Samples are stored row-major,
/// the last axis varying fastest.
///
/// dim == 1 is a line grid used for the exact one-dimensional solutions; it has no transverse
/// axes and half_length_transverse is 0.
template <typename Scalar>
struct BasicGrid {
  int dim = 2;
  Scalar half_length_x1 = 0;
  Scalar half_length_transverse = 0;
  Scalar spacing = 0;
  std::array<Index, 3> counts{1, 1, 1};
  TransverseBc bc_transverse = TransverseBc::dirichlet_one;

  Index size() const { return counts[0] * counts[1] * counts[2]; }

  Index stride(int axis) const {
    Index s = 1;
    for (int a = 2; a > axis; --a) s *= counts[a];
    return s;
  }

  bool is_periodic(int axis) const {
    return axis > 0 && axis < dim && bc_transverse == TransverseBc::periodic;
  }

  Scalar coordinate(int axis, Index i) const {
    if (axis >= dim) return Scalar(0);
    const Scalar half = axis == 0 ? half_length_x1 : half_length_transverse;
    return -half + static_cast<Scalar>(i) * spacing;
  }

  /// One-dimensional quadrature weight of sample i on an axis: trapezoidal on Dirichlet axes,
  /// rectangle rule on periodic axes, 1 on unused axes.
  Scalar weight(int axis, Index i) const {
    if (axis >= dim) return Scalar(1);
    if (is_periodic(axis)) return spacing;
    return (i == 0 || i == counts[axis] - 1) ? spacing / 2 : spacing;
  }

  std::array<Index, 3> unflatten(Index flat) const {
    const Index k = flat % counts[2];
    const Index rest = flat / counts[2];
    return {rest / counts[1], rest % counts[1], k};
  }

  Index flatten(Index i, Index j, Index k) const { return (i * counts[1] + j) * counts[2] + k; }

  bool on_dirichlet_boundary(const std::array<Index, 3>& idx) const {
    for (int a = 0; a < dim; ++a) {
      if (is_periodic(a)) continue;
      if (idx[a] == 0 || idx[a] == counts[a] - 1) return true;
    }
    return false;
  }

  bool on_dirichlet_boundary(Index flat) const { return on_dirichlet_boundary(unflatten(flat)); }

  /// Neighbor along `axis` in direction `dir` (+1/-1), wrapping on periodic axes; -1 when the
  /// neighbor would leave the grid.
  Index neighbor(const std::array<Index, 3>& idx, int axis, int dir) const {
    Index n = idx[axis] + dir;
    if (is_periodic(axis)) {
      n = (n + counts[axis]) % counts[axis];
    } else if (n < 0 || n >= counts[axis]) {
      return -1;
    }
    std::array<Index, 3> m = idx;
    m[axis] = n;
    return flatten(m[0], m[1], m[2]);
  }

  /// Squared Euclidean distance from the origin of sample `flat`.
  Scalar radius2(Index flat) const {
    const auto idx = unflatten(flat);
    Scalar r2 = 0;
    for (int a = 0; a < dim; ++a) {
      const Scalar x = coordinate(a, idx[a]);
      r2 += x * x;
    }
    return r2;
  }

  /// h^d: the full-cell volume.
  Scalar cell_volume() const { return std::pow(spacing, dim); }

  friend bool operator==(const BasicGrid& a, const BasicGrid& b) {
    return a.dim == b.dim && a.half_length_x1 == b.half_length_x1 &&
           a.half_length_transverse == b.half_length_transverse && a.spacing == b.spacing &&
           a.counts == b.counts && a.bc_transverse == b.bc_transverse;
  }
};

namespace detail {

template <typename Scalar>
Index checked_ratio(Scalar extent, Scalar h, const char* what) {
  const Scalar ratio = extent / h;
  const Scalar rounded = std::round(ratio);
  if (rounded < 1 || std::abs(ratio - rounded) > Scalar(1e-9) * std::max(Scalar(1), ratio)) {
    throw ConfigError(std::string(what) + " is not an integral multiple of the spacing");
  }
  return static_cast<Index>(rounded);
}

}  // namespace detail

/// Build a slab grid. dim is 2 or 3 for slabs, 1 for a line grid on [-N, N] (M is ignored).
template <typename Scalar = double>
BasicGrid<Scalar> make_grid(int dim, Scalar N, Scalar M, Scalar h,
                            TransverseBc bc = TransverseBc::dirichlet_one) {
  if (dim < 1 || dim > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
  if (!(h > 0)) throw ConfigError("grid spacing must be positive");
  if (!(N > 0)) throw ConfigError("slab half-length N must be positive");
  if (N < 4) throw ConfigError("slab half-length N must be at least 4");
  BasicGrid<Scalar> g;
  g.dim = dim;
  g.half_length_x1 = N;
  g.spacing = h;
  g.counts[0] = 2 * detail::checked_ratio(N, h, "N") + 1;
  if (dim == 1) {
    g.half_length_transverse = 0;
    g.bc_transverse = TransverseBc::dirichlet_one;
    return g;
  }
  if (!(M > 0)) throw ConfigError("transverse half-length M must be positive");
  g.half_length_transverse = M;
  g.bc_transverse = bc;
  const Index half = detail::checked_ratio(M, h, "M");
  const Index transverse = bc == TransverseBc::periodic ? 2 * half : 2 * half + 1;
  for (int a = 1; a < dim; ++a) g.counts[a] = transverse;
  return g;
}

/// Flat indices of samples that are not on a Dirichlet boundary, in storage order.
template <typename Scalar>
std::vector<Index> interior_indices(const BasicGrid<Scalar>& g) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(g.size()));
  for (Index p = 0; p < g.size(); ++p) {
    if (!g.on_dirichlet_boundary(p)) out.push_back(p);
  }
  return out;
}

using Grid = BasicGrid<double>;

}  // namespace gpwaves
