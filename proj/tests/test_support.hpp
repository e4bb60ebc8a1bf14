#pragma once

// Independent oracles and fixtures shared by the test binaries. Nothing here calls into the
// discretized functionals it is used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

#include "gpwaves/field.hpp"

namespace gpwaves::testing {

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2;
  const double lm = (a + m) / 2;
  const double rm = (m + b) / 2;
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) {
    return left + right + (left + right - whole) / 15;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 30) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f((a + b) / 2);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// First root of f in (a, b) by bisection; requires a sign change.
inline double bisect(const std::function<double(double)>& f, double a, double b, double tol = 1e-14) {
  double fa = f(a);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double m = (a + b) / 2;
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return (a + b) / 2;
}

/// Closed-form energy density of the dark soliton, 1/2 |psi'|^2 + 1/4 (1 - |psi|^2)^2, written
/// out from psi = -A tanh(k x) + i c / sqrt 2 with A^2 = (2 - c^2)/2, k = sqrt(2 - c^2)/2.
inline double soliton_energy_density(double c, double x) {
  const double a2 = (2 - c * c) / 2;
  const double k = std::sqrt(2 - c * c) / 2;
  const double sech2 = 1 / (std::cosh(k * x) * std::cosh(k * x));
  const double dpsi2 = a2 * k * k * sech2 * sech2;
  const double defect = a2 * sech2;
  return 0.5 * dpsi2 + 0.25 * defect * defect;
}

/// Smooth random perturbation: a sum of a few Gaussian bumps with random complex amplitudes,
/// centers and widths, multiplied by a factor that vanishes on the Dirichlet boundary.
inline Field random_smooth_field(const Grid& g, std::uint64_t seed, double amplitude = 0.3,
                                 int bumps = 4, bool add_one = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  struct Bump {
    double x[3];
    double w;
    std::complex<double> a;
  };
  std::vector<Bump> bs;
  for (int b = 0; b < bumps; ++b) {
    Bump bump{};
    bump.x[0] = 0.5 * g.half_length_x1 * uni(rng);
    bump.x[1] = 0.5 * g.half_length_transverse * uni(rng);
    bump.x[2] = 0.5 * g.half_length_transverse * uni(rng);
    bump.w = 1.0 + 0.5 * (uni(rng) + 1.0);
    bump.a = amplitude * std::complex<double>(uni(rng), uni(rng));
    bs.push_back(bump);
  }
  const double N = g.half_length_x1;
  const double M = g.half_length_transverse;
  Field f = Field::sample(g, [&](double x1, double x2, double x3) {
    const double xs[3] = {x1, x2, x3};
    std::complex<double> s(0);
    for (const auto& b : bs) {
      double r2 = 0;
      for (int a = 0; a < g.dim; ++a) r2 += (xs[a] - b.x[a]) * (xs[a] - b.x[a]);
      s += b.a * std::exp(-r2 / (b.w * b.w));
    }
    double cut = std::sin(std::numbers::pi * (x1 + N) / (2 * N));
    if (g.dim > 1 && g.bc_transverse == TransverseBc::dirichlet_one) {
      for (int a = 1; a < g.dim; ++a) cut *= std::sin(std::numbers::pi * (xs[a] + M) / (2 * M));
    }
    return (add_one ? std::complex<double>(1) : std::complex<double>(0)) + cut * s;
  });
  if (add_one) {
    f.set_dirichlet_boundary(Complex(1, 0));
  } else {
    f.set_dirichlet_boundary(Complex(0, 0));
  }
  return f;
}

}  // namespace gpwaves::testing
