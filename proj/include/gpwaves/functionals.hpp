#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>

#include "gpwaves/field.hpp"
#include "gpwaves/operators.hpp"

namespace gpwaves {

// Discretization of the Lagrangian I^c = E - c P on a grid.
//
//   kinetic    1/2 sum over grid edges of w_e |psi_q - psi_p|^2 / h^2, where w_e is the edge
//              length h times the quadrature weights of the transverse coordinates
//   potential  1/4 integral of (1 - |psi|^2)^2 with the grid quadrature
//   momentum   -sum over interior samples of w_p D1 Im(psi) (Re(psi) - 1), D1 centered
//
// For samples off the Dirichlet boundary every edge weight and w_p equal h^d, so the exact
// gradient of this discrete I^c is -h^d times el_residual() and its exact Hessian is h^d times
// hessian_apply(). Solver, Newton and Morse code rely on that identity.

template <typename Scalar>
struct BasicFunctionalReport {
  Scalar energy = 0;
  Scalar momentum = 0;
  Scalar lagrangian = 0;
  Scalar transverse_A = 0;    ///< 1/2 sum_{j>=2} |d_j psi|^2
  Scalar longitudinal_B = 0;  ///< 1/2 |d_1 psi|^2 + 1/4 (1-|psi|^2)^2 - c P
  Scalar c = 0;
};

using FunctionalReport = BasicFunctionalReport<double>;

namespace detail {

/// Centered x1 difference (f[p + s] - f[p - s]) / 2h at a sample off the x1 ends.
template <typename Scalar, typename Values>
std::complex<Scalar> d1_centered(const BasicGrid<Scalar>& g, const Values& f, Index p) {
  const Index s = g.stride(0);
  return (f[p + s] - f[p - s]) / (Scalar(2) * g.spacing);
}

}  // namespace detail

/// Per-axis kinetic terms 1/2 int |d_a psi|^2 in the edge discretization.
template <typename Scalar>
std::array<Scalar, 3> kinetic_by_axis(const BasicField<Scalar>& f) {
  const auto& g = f.grid();
  std::array<Scalar, 3> out{0, 0, 0};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> terms(g.size());
  const Scalar scale = Scalar(0.5) / g.spacing;  // h * (1/h^2) * 1/2
  for (int a = 0; a < g.dim; ++a) {
    for (Index i = 0; i < g.counts[0]; ++i) {
      for (Index j = 0; j < g.counts[1]; ++j) {
        for (Index k = 0; k < g.counts[2]; ++k) {
          const std::array<Index, 3> idx{i, j, k};
          const Index p = g.flatten(i, j, k);
          const Index q = g.neighbor(idx, a, +1);
          if (q < 0) {
            terms[p] = 0;
            continue;
          }
          Scalar w = scale;
          for (int b = 0; b < g.dim; ++b) {
            if (b != a) w *= g.weight(b, idx[b]);
          }
          terms[p] = w * std::norm(f[q] - f[p]);
        }
      }
    }
    out[a] = pairwise_sum(terms.data(), terms.size());
  }
  return out;
}

template <typename Scalar>
Scalar potential_energy(const BasicField<Scalar>& f) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> density =
      (Scalar(1) - f.values().array().abs2()).square() * Scalar(0.25);
  return integrate(f.grid(), density);
}

/// E = int 1/2 |grad psi|^2 + 1/4 (1 - |psi|^2)^2.
template <typename Scalar>
Scalar energy(const BasicField<Scalar>& f) {
  const auto k = kinetic_by_axis(f);
  return (k[0] + k[1] + k[2]) + potential_energy(f);
}

/// Renormalized momentum P = -int d_1(Im psi) (Re psi - 1). Boundary samples are dropped; they
/// carry no contribution for fields equal to 1 on the Dirichlet boundary.
template <typename Scalar>
Scalar momentum(const BasicField<Scalar>& f) {
  const auto& g = f.grid();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> density = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    const auto idx = g.unflatten(p);
    if (g.on_dirichlet_boundary(idx)) continue;
    const Scalar dv = detail::d1_centered(g, f, p).imag();
    density[p] = -dv * (f[p].real() - Scalar(1));
  }
  return integrate(g, density);
}

template <typename Scalar>
BasicFunctionalReport<Scalar> lagrangian(const BasicField<Scalar>& f, Scalar c) {
  const auto k = kinetic_by_axis(f);
  BasicFunctionalReport<Scalar> r;
  r.c = c;
  const Scalar pot = potential_energy(f);
  r.momentum = momentum(f);
  r.transverse_A = k[1] + k[2];
  r.energy = k[0] + r.transverse_A + pot;
  r.longitudinal_B = k[0] + pot - c * r.momentum;
  r.lagrangian = r.energy - c * r.momentum;
  return r;
}

/// Pointwise i c d_1 psi + Lap psi + (1 - |psi|^2) psi off the Dirichlet boundary, 0 on it.
/// The discrete gradient of I^c is -h^d times this field, so +residual is a descent direction.
template <typename Scalar>
BasicField<Scalar> el_residual(const BasicField<Scalar>& f, Scalar c) {
  using C = std::complex<Scalar>;
  const auto& g = f.grid();
  const Scalar inv_h2 = Scalar(1) / (g.spacing * g.spacing);
  const C ic(0, c);
  BasicField<Scalar> out(g);
  for (Index p = 0; p < g.size(); ++p) {
    const auto idx = g.unflatten(p);
    if (g.on_dirichlet_boundary(idx)) continue;
    C lap(0);
    for (int a = 0; a < g.dim; ++a) {
      lap += f[g.neighbor(idx, a, +1)] + f[g.neighbor(idx, a, -1)] - Scalar(2) * f[p];
    }
    out[p] = ic * detail::d1_centered(g, f, p) + lap * inv_h2 + (Scalar(1) - std::norm(f[p])) * f[p];
  }
  return out;
}

template <typename Scalar>
Scalar residual_max_norm(const BasicField<Scalar>& f, Scalar c) {
  return el_residual(f, c).max_abs();
}

/// Hessian of the discrete Lagrangian per unit cell volume, applied to `test`:
/// -(Lap t + (1 - |psi|^2) t - 2 <psi, t> psi + i c d_1 t) off the boundary, 0 on it.
/// `test` must vanish on every Dirichlet boundary sample.
template <typename Scalar>
BasicField<Scalar> hessian_apply(const BasicField<Scalar>& base, Scalar c,
                                 const BasicField<Scalar>& test) {
  using C = std::complex<Scalar>;
  const auto& g = base.grid();
  if (!(test.grid() == g)) throw ContractViolation("hessian_apply: grids differ");
  if (!test.boundary_equals(C(0))) {
    throw ContractViolation("hessian_apply: test direction must vanish on the Dirichlet boundary");
  }
  const Scalar inv_h2 = Scalar(1) / (g.spacing * g.spacing);
  const C ic(0, c);
  BasicField<Scalar> out(g);
  for (Index p = 0; p < g.size(); ++p) {
    const auto idx = g.unflatten(p);
    if (g.on_dirichlet_boundary(idx)) continue;
    C lap(0);
    for (int a = 0; a < g.dim; ++a) {
      lap += test[g.neighbor(idx, a, +1)] + test[g.neighbor(idx, a, -1)] - Scalar(2) * test[p];
    }
    const C psi = base[p];
    const Scalar proj = psi.real() * test[p].real() + psi.imag() * test[p].imag();
    out[p] = -(lap * inv_h2 + (Scalar(1) - std::norm(psi)) * test[p] - Scalar(2) * proj * psi +
               ic * detail::d1_centered(g, test, p));
  }
  return out;
}

/// Real pairing int <a, b> = int Re(a) Re(b) + Im(a) Im(b) with the grid quadrature.
template <typename Scalar>
Scalar real_pairing(const BasicField<Scalar>& a, const BasicField<Scalar>& b) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d =
      (a.values().array().real() * b.values().array().real() +
       a.values().array().imag() * b.values().array().imag())
          .matrix();
  return integrate(a.grid(), d);
}

/// Q(t) = int |grad t|^2 - c <t, i d_1 t> - (1 - |psi|^2)|t|^2 + 2 <t, psi>^2, discretized
/// consistently with hessian_apply.
template <typename Scalar>
Scalar hessian_quadratic(const BasicField<Scalar>& base, Scalar c, const BasicField<Scalar>& test) {
  return real_pairing(hessian_apply(base, c, test), test);
}

}  // namespace gpwaves
