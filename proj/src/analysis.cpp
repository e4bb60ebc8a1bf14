#include "gpwaves/analysis.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "gpwaves/functionals.hpp"
#include "gpwaves/operators.hpp"

namespace gpwaves {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::vector<Index> neighbors(const Grid& g, Index p) {
  std::vector<Index> out;
  const auto idx = g.unflatten(p);
  for (int a = 0; a < g.dim; ++a) {
    for (int dir : {-1, +1}) {
      const Index q = g.neighbor(idx, a, dir);
      if (q >= 0 && q != p) out.push_back(q);
    }
  }
  return out;
}

std::array<double, 3> position(const Grid& g, Index p) {
  const auto idx = g.unflatten(p);
  return {g.coordinate(0, idx[0]), g.coordinate(1, idx[1]), g.coordinate(2, idx[2])};
}

double masked_integral(const Grid& g, const Eigen::VectorXd& density, const std::vector<std::uint8_t>& mask) {
  Eigen::VectorXd d = density;
  for (Index p = 0; p < g.size(); ++p) {
    if (!mask[static_cast<std::size_t>(p)]) d[p] = 0;
  }
  return integrate(g, d);
}

double normalized(double lhs, double rhs) {
  return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-10});
}

}  // namespace

Lifting lift(const Field& f, double threshold) {
  const Grid& g = f.grid();
  Lifting l;
  l.threshold = threshold;
  l.rho = ScalarField{g, f.values().cwiseAbs()};
  l.theta = ScalarField{g, Eigen::VectorXd(g.size())};
  l.valid_mask.assign(static_cast<std::size_t>(g.size()), 0);
  for (Index p = 0; p < g.size(); ++p) {
    l.theta.values[p] = std::arg(f[p]);
    l.valid_mask[static_cast<std::size_t>(p)] = l.rho.values[p] > threshold ? 1 : 0;
  }
  for (Index p = 0; p < g.size() && l.seed < 0; ++p) {
    if (g.on_dirichlet_boundary(p) && l.valid_mask[static_cast<std::size_t>(p)]) l.seed = p;
  }
  if (l.seed < 0) throw DomainError("lift: no boundary sample with modulus above the lifting threshold");

  std::vector<std::uint8_t> visited(static_cast<std::size_t>(g.size()), 0);
  auto grow = [&](Index start) {
    std::deque<Index> queue{start};
    visited[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
      const Index p = queue.front();
      queue.pop_front();
      for (Index q : neighbors(g, p)) {
        const auto qs = static_cast<std::size_t>(q);
        if (visited[qs] || !l.valid_mask[qs]) continue;
        visited[qs] = 1;
        l.theta.values[q] = l.theta.values[p] + std::arg(f[q] / f[p]);
        queue.push_back(q);
      }
    }
  };
  grow(l.seed);
  for (Index p = 0; p < g.size(); ++p) {
    const auto ps = static_cast<std::size_t>(p);
    if (l.valid_mask[ps] && !visited[ps]) grow(p);
  }

  // connected components of the invalid set
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.size()), 0);
  for (Index p = 0; p < g.size(); ++p) {
    const auto ps = static_cast<std::size_t>(p);
    if (l.valid_mask[ps] || seen[ps]) continue;
    ++l.hole_count;
    std::deque<Index> queue{p};
    seen[ps] = 1;
    while (!queue.empty()) {
      const Index r = queue.front();
      queue.pop_front();
      ++l.invalid_count;
      for (Index q : neighbors(g, r)) {
        const auto qs = static_cast<std::size_t>(q);
        if (!seen[qs] && !l.valid_mask[qs]) {
          seen[qs] = 1;
          queue.push_back(q);
        }
      }
    }
  }
  return l;
}

WindingResult winding(const Field& f, Index cell) {
  const Grid& g = f.grid();
  if (g.dim < 2) throw ContractViolation("winding needs a grid with at least two axes");
  const auto idx = g.unflatten(cell);
  const Index p10 = g.neighbor(idx, 0, +1);
  const Index p01 = g.neighbor(idx, 1, +1);
  if (p10 < 0 || p01 < 0) throw ContractViolation("winding: plaquette leaves the grid");
  const Index p11 = g.neighbor(g.unflatten(p10), 1, +1);
  const std::array<Index, 5> loop{cell, p10, p11, p01, cell};
  WindingResult w;
  double sum = 0;
  for (std::size_t k = 0; k + 1 < loop.size(); ++k) {
    const Complex a = f[loop[k]];
    const Complex b = f[loop[k + 1]];
    if (std::abs(a) < 1e-12) w.degenerate = true;
    sum += std::arg(b / a);
  }
  w.raw = sum / kTwoPi;
  w.winding = static_cast<int>(std::lround(w.raw));
  if (std::abs(w.raw - w.winding) > 0.2) w.degenerate = true;
  if (w.degenerate || !std::isfinite(w.raw)) w.winding = 0;
  return w;
}

int VortexSet::total_winding() const {
  int s = 0;
  for (const auto& p : plaquettes) s += p.winding;
  return s;
}

std::vector<Ball> aggregate_balls(std::vector<Ball> balls, Index* rounds) {
  Index n = 0;
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < balls.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < balls.size(); ++j) {
        double d2 = 0;
        for (int a = 0; a < 3; ++a) d2 += std::pow(balls[i].center[a] - balls[j].center[a], 2);
        if (std::sqrt(d2) <= balls[i].radius + balls[j].radius) {
          balls[i].radius += balls[j].radius;
          balls.erase(balls.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
          ++n;
          break;
        }
      }
    }
  }
  if (rounds) *rounds = n;
  return balls;
}

VortexSet vortex_detect(const Field& f, double ball_radius, double low_modulus) {
  const Grid& g = f.grid();
  VortexSet vs;
  if (g.dim < 2) return vs;
  const double h = g.spacing;
  std::vector<Ball> balls;
  for (Index p = 0; p < g.size(); ++p) {
    const auto idx = g.unflatten(p);
    const Index p10 = g.neighbor(idx, 0, +1);
    const Index p01 = g.neighbor(idx, 1, +1);
    if (p10 < 0 || p01 < 0) continue;
    if (g.dim == 3) {
      // cube corners
      double m = std::abs(f[p]);
      const Index p001 = g.neighbor(idx, 2, +1);
      if (p001 < 0) continue;
      for (Index q : {p10, p01, p001}) m = std::min(m, std::abs(f[q]));
      const Index p11 = g.neighbor(g.unflatten(p10), 1, +1);
      const auto i11 = g.unflatten(p11);
      for (Index q : {p11, g.neighbor(g.unflatten(p10), 2, +1), g.neighbor(g.unflatten(p01), 2, +1),
                      g.neighbor(i11, 2, +1)}) {
        m = std::min(m, std::abs(f[q]));
      }
      if (m < low_modulus) vs.low_modulus_cells.push_back(p);
      continue;
    }
    const WindingResult w = winding(f, p);
    if (w.degenerate) {
      vs.degenerate_cells.push_back(p);
      continue;
    }
    if (w.winding == 0) continue;
    vs.plaquettes.push_back({p, w.winding});
    const auto x = position(g, p);
    balls.push_back(Ball{{x[0] + h / 2, x[1] + h / 2, 0.0}, ball_radius});
  }
  vs.balls = aggregate_balls(std::move(balls), &vs.aggregation_rounds);
  return vs;
}

PohozaevResiduals pohozaev_residuals(const Field& f, double c) {
  const Grid& g = f.grid();
  const auto k = kinetic_by_axis(f);
  const double grad2 = 2 * (k[0] + k[1] + k[2]);
  const double defect2 = 4 * potential_energy(f);
  const FunctionalReport r = lagrangian(f, c);
  const double d = g.dim;
  PohozaevResiduals out;
  out.scale = r.energy + std::abs(c * r.momentum) + 1e-10;
  out.r1 = ((d - 2) / 2 * grad2 - (d - 1) * c * r.momentum + d / 4 * defect2) / out.scale;
  out.r2 = ((d - 3) * r.transverse_A + (d - 1) * r.longitudinal_B) / out.scale;
  return out;
}

LiftingIdentities lifting_momentum_identities(const Lifting& l, double c) {
  const Grid& g = l.rho.grid;
  Field psi(g);
  for (Index p = 0; p < g.size(); ++p) psi[p] = std::polar(l.rho.values[p], l.theta.values[p]);
  const auto grad = gradient(psi);

  std::vector<std::uint8_t> mask = l.valid_mask;
  LiftingIdentities out;
  out.approximate = l.invalid_count > 0;

  Eigen::VectorXd p_dens(g.size()), kin_theta(g.size()), lhs3(g.size()), rhs3a(g.size()), rhs3b(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    const double rho = l.rho.values[p];
    if (!(rho > 0)) {
      mask[static_cast<std::size_t>(p)] = 0;
      p_dens[p] = kin_theta[p] = lhs3[p] = rhs3a[p] = rhs3b[p] = 0;
      continue;
    }
    const Complex z = psi[p];
    double grad_theta2 = 0, grad_rho2 = 0, d1_theta = 0;
    for (int a = 0; a < g.dim; ++a) {
      const Complex w = std::conj(z) * grad[static_cast<std::size_t>(a)][p];
      const double dtheta = w.imag() / (rho * rho);  // (u v' - v u') / rho^2
      const double drho = w.real() / rho;
      grad_theta2 += dtheta * dtheta;
      grad_rho2 += drho * drho;
      if (a == 0) d1_theta = dtheta;
    }
    const double defect = 1 - rho * rho;
    p_dens[p] = 0.5 * defect * d1_theta;
    kin_theta[p] = rho * rho * grad_theta2;
    lhs3[p] = 2 * rho * grad_rho2 + rho * defect * defect;
    rhs3a[p] = rho * defect * d1_theta;
    rhs3b[p] = rho * defect * grad_theta2;
  }
  out.p_lift = masked_integral(g, p_dens, mask);
  out.id2 = normalized(c * out.p_lift, masked_integral(g, kin_theta, mask));
  out.id3 = normalized(masked_integral(g, lhs3, mask),
                       c * masked_integral(g, rhs3a, mask) + masked_integral(g, rhs3b, mask));
  return out;
}

double sublevel_measure(const Field& f, double r) {
  if (!(r > 0 && r < 1)) throw DomainError("sublevel_measure needs 0 < r < 1");
  const Index count = (f.values().array().abs() < r).count();
  return f.grid().cell_volume() * static_cast<double>(count);
}

DecayFit decay_fit(const Field& f) {
  const Grid& g = f.grid();
  const double lo = 0.4 * g.half_length_x1;
  const double hi = 0.8 * g.half_length_x1;
  std::vector<double> lx, lv, lu;
  DecayFit out;
  for (Index p = 0; p < g.size(); ++p) {
    const double r = std::sqrt(g.radius2(p));
    if (r < lo || r > hi) continue;
    const double v = std::abs(f[p].imag());
    const double u = std::abs(f[p].real() - 1);
    if (v < 1e-14 || u < 1e-14) {
      out.underflow = true;
      continue;
    }
    lx.push_back(std::log(r));
    lv.push_back(std::log(v));
    lu.push_back(std::log(u));
  }
  out.samples = static_cast<Index>(lx.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (out.underflow || lx.size() < 3) {
    out.underflow = true;
    out.exp_v = out.exp_u = out.width_v = out.width_u = nan;
    return out;
  }
  const auto n = static_cast<Index>(lx.size());
  const Eigen::Map<const Eigen::VectorXd> x(lx.data(), n);
  const double xm = x.mean();
  const Eigen::VectorXd dx = x.array() - xm;
  const double sxx = dx.squaredNorm();
  auto fit = [&](const std::vector<double>& ys, double& slope, double& width) {
    const Eigen::Map<const Eigen::VectorXd> y(ys.data(), n);
    const Eigen::VectorXd dy = y.array() - y.mean();
    slope = sxx > 0 ? dx.dot(dy) / sxx : nan;
    const double ssr = (dy - slope * dx).squaredNorm();
    width = 2 * std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  };
  fit(lv, out.exp_v, out.width_v);
  fit(lu, out.exp_u, out.width_u);
  return out;
}

}  // namespace gpwaves
