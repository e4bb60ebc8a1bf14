#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "gpwaves/field.hpp"
#include "gpwaves/operators.hpp"

namespace gpwaves {

// Exact one-dimensional traveling waves of i c psi' + psi'' + (1 - |psi|^2) psi = 0 and the
// explicit linearization around circular waves. Everything here is closed form; the rest of
// the library is tested against it.

template <typename Scalar>
struct BasicSolitonParams {
  Scalar c = 0;
  Scalar shift = 0;
};

template <typename Scalar>
void check_soliton(const BasicSolitonParams<Scalar>& p) {
  if (!(p.c >= 0) || !(2 - p.c * p.c > 0)) {
    throw DomainError("soliton requires 0 <= c < sqrt(2)");
  }
}

/// Dark soliton -sqrt((2-c^2)/2) tanh(sqrt(2-c^2)/2 (x - t)) + i c / sqrt(2).
///
/// The real part is oriented so that the profile solves the equation with +i c d_1; the
/// reflected profile solves the equation with the opposite sign. c = 0 is the black soliton.
template <typename Scalar>
std::complex<Scalar> soliton(const BasicSolitonParams<Scalar>& p, Scalar x) {
  check_soliton(p);
  const Scalar d = 2 - p.c * p.c;
  const Scalar amp = std::sqrt(d / 2);
  const Scalar k = std::sqrt(d) / 2;
  return {-amp * std::tanh(k * (x - p.shift)), p.c / std::numbers::sqrt2_v<Scalar>};
}

/// (2 - c^2)^{3/2} / 3.
template <typename Scalar>
Scalar soliton_energy(Scalar c) {
  check_soliton(BasicSolitonParams<Scalar>{c, 0});
  return std::pow(2 - c * c, Scalar(1.5)) / 3;
}

template <typename Scalar>
struct BasicCircularParams {
  Scalar c = 0;
  Scalar rho0 = 1;
  Scalar omega0 = 0;
  Scalar omega1 = 0;  ///< omega0 + c/2
};

/// Circular wave rho0 e^{i omega0 x} with omega0^2 + c omega0 + rho0^2 = 1.
///
/// The default root is the one continuous with the constant solution at rho0 = 1 (omega0 = 0
/// there); `other_root` selects (-c - sqrt(disc)) / 2.
template <typename Scalar>
BasicCircularParams<Scalar> make_circular(Scalar c, Scalar rho0, bool other_root = false) {
  if (!(rho0 > 0)) throw DomainError("circular wave needs rho0 > 0");
  const Scalar disc = c * c + 4 * (1 - rho0 * rho0);
  if (disc < 0) throw DomainError("circular wave: negative discriminant c^2 - 4(rho0^2 - 1)");
  const Scalar root = std::sqrt(disc);
  BasicCircularParams<Scalar> p;
  p.c = c;
  p.rho0 = rho0;
  p.omega0 = other_root ? (-c - root) / 2 : (-c + root) / 2;
  p.omega1 = p.omega0 + c / 2;
  return p;
}

template <typename Scalar>
std::complex<Scalar> circular(const BasicCircularParams<Scalar>& p, Scalar x) {
  return std::polar(p.rho0, p.omega0 * x);
}

/// mu = sqrt(4 omega1^2 - 2 rho0^2), the oscillation frequency of the linearized solution.
/// Throws outside the oscillatory regime rho0^2 < (2/3)(1 + c^2/4).
template <typename Scalar>
Scalar linearized_frequency(const BasicCircularParams<Scalar>& p) {
  const Scalar rho2 = p.rho0 * p.rho0;
  const Scalar mu2 = 4 * p.omega1 * p.omega1 - 2 * rho2;
  const Scalar threshold = Scalar(2) / 3 * (1 + p.c * p.c / 4);
  if (!(rho2 < threshold) || !(mu2 > Scalar(1e-12) * std::max(Scalar(1), rho2))) {
    throw DomainError("circular wave outside the oscillatory regime rho0^2 < (2/3)(1 + c^2/4)");
  }
  return std::sqrt(mu2);
}

/// eta(s) = sin(mu s)/mu + i omega1 (cos(mu s) - 1) / (2 omega1^2 - rho0^2), the solution of
/// eta'' + 2 i omega1 eta' - rho0^2 (eta + conj(eta)) = 0 with eta(0) = 0, eta'(0) = 1.
template <typename Scalar>
std::complex<Scalar> eta_linearized(Scalar s, const BasicCircularParams<Scalar>& p) {
  const Scalar mu = linearized_frequency(p);
  const Scalar denom = 2 * p.omega1 * p.omega1 - p.rho0 * p.rho0;
  return {std::sin(s * mu) / mu, p.omega1 * (std::cos(s * mu) - 1) / denom};
}

/// Distance 2 pi / mu between consecutive zeros of eta.
template <typename Scalar>
Scalar conjugate_spacing(const BasicCircularParams<Scalar>& p) {
  return 2 * std::numbers::pi_v<Scalar> / linearized_frequency(p);
}

/// Line grid on [-N, N] with Dirichlet ends.
template <typename Scalar = double>
BasicGrid<Scalar> line_grid(Scalar N, Scalar h) {
  return make_grid<Scalar>(1, N, Scalar(0), h);
}

/// Samples of the soliton in x1 on any grid; boundary samples carry the exact values.
template <typename Scalar>
BasicField<Scalar> sample_soliton(const BasicGrid<Scalar>& g, const BasicSolitonParams<Scalar>& p) {
  check_soliton(p);
  return BasicField<Scalar>::sample(g, [&](Scalar x1, Scalar, Scalar) { return soliton(p, x1); });
}

template <typename Scalar>
BasicField<Scalar> sample_circular(const BasicGrid<Scalar>& g, const BasicCircularParams<Scalar>& p) {
  return BasicField<Scalar>::sample(g, [&](Scalar x1, Scalar, Scalar) { return circular(p, x1); });
}

/// The 1-D invariants
///   g = u' v - v' u - (c/2)(rho^2 - 1),   h = 1/2 |psi'|^2 - 1/4 (1 - rho^2)^2,
/// with x1 derivatives from gradient(). Both are constant along exact 1-D solutions.
template <typename Scalar>
std::pair<BasicScalarField<Scalar>, BasicScalarField<Scalar>> invariants_gh_1d(
    const BasicField<Scalar>& f, Scalar c) {
  const auto d1 = gradient(f)[0];
  const auto& g = f.grid();
  BasicScalarField<Scalar> gf{g, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(g.size())};
  BasicScalarField<Scalar> hf{g, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(g.size())};
  for (Index p = 0; p < g.size(); ++p) {
    const auto psi = f[p];
    const auto dpsi = d1[p];
    const Scalar rho2 = std::norm(psi);
    gf.values[p] = dpsi.real() * psi.imag() - dpsi.imag() * psi.real() - c / 2 * (rho2 - 1);
    hf.values[p] = std::norm(dpsi) / 2 - (1 - rho2) * (1 - rho2) / 4;
  }
  return {std::move(gf), std::move(hf)};
}

using SolitonParams = BasicSolitonParams<double>;
using CircularParams = BasicCircularParams<double>;

}  // namespace gpwaves
