#include "gpwaves/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "gpwaves/morse.hpp"
#include "gpwaves/sparse_hessian.hpp"

namespace gpwaves {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

Field axpy(const Field& x, double a, const Field& d) { return Field(x.grid(), x.values() + a * d.values()); }

Field difference(const Field& a, const Field& b) { return Field(a.grid(), a.values() - b.values()); }

double lagrangian_value(const Field& f, double c) { return lagrangian(f, c).lagrangian; }

// C^1 step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * (3 - 2 * t);
}

// Window equal to 1 farther than `width` from every Dirichlet boundary face.
double boundary_window(const Grid& g, double x1, double x2, double x3, double width) {
  double w = smooth_step((g.half_length_x1 - std::abs(x1)) / width);
  if (g.dim > 1 && g.bc_transverse == TransverseBc::dirichlet_one) {
    w *= smooth_step((g.half_length_transverse - std::abs(x2)) / width);
    if (g.dim > 2) w *= smooth_step((g.half_length_transverse - std::abs(x3)) / width);
  }
  return w;
}

// Vortex of degree +1 at (0, d/2) and -1 at (0, -d/2) in the (x1, s) plane, core profile
// r / sqrt(r^2 + 2).
Complex vortex_pair(double x1, double s, double d) {
  const Complex za(x1, s - d / 2);
  const Complex zb(x1, s + d / 2);
  return za / std::sqrt(std::norm(za) + 2) * std::conj(zb) / std::sqrt(std::norm(zb) + 2);
}

Field pair_field(const Grid& g, double d, double window_width) {
  return Field::sample(g, [&](double x1, double x2, double x3) {
    const double s = g.dim > 2 ? std::hypot(x2, x3) : x2;
    const double w = boundary_window(g, x1, x2, x3, window_width);
    return Complex(1, 0) + w * (vortex_pair(x1, s, d) - Complex(1, 0));
  });
}

Eigen::VectorXd interior_vector(const Field& f) {
  Eigen::VectorXd v(2 * f.size());
  for (Index p = 0; p < f.size(); ++p) {
    v[2 * p] = f[p].real();
    v[2 * p + 1] = f[p].imag();
  }
  return v;
}

// Places the fixed node at the maximum of I^c on the polyline within a tenth of a segment of it
// (golden section), then moves all nodes except node 0, the fixed node and the endpoint to equal H1
// arclength spacing on each side of it.
void reparametrize(std::vector<Field>& nodes, std::vector<double>& vals, Index fixed, const SobolevPreconditioner& s,
                   double c) {
  const Index count = static_cast<Index>(nodes.size());
  std::vector<double> arc(static_cast<std::size_t>(count), 0.0);
  for (Index k = 1; k < count; ++k) {
    const Field d = difference(nodes[static_cast<std::size_t>(k)], nodes[static_cast<std::size_t>(k - 1)]);
    arc[static_cast<std::size_t>(k)] = arc[static_cast<std::size_t>(k - 1)] + std::sqrt(std::max(0.0, s.inner(d, d)));
  }
  const double total = arc.back();
  if (!(total > 0)) return;

  auto point_at = [&](double target) {
    std::size_t i = 0;
    while (i + 2 < arc.size() && arc[i + 1] < target) ++i;
    const double len = arc[i + 1] - arc[i];
    const double theta = len > 0 ? std::clamp((target - arc[i]) / len, 0.0, 1.0) : 0.0;
    return Field(nodes[i].grid(), nodes[i].values() + theta * (nodes[i + 1].values() - nodes[i].values()));
  };

  const auto uf = static_cast<std::size_t>(fixed);
  Field top = nodes[uf];
  double top_val = vals[uf];
  double s_fixed = arc[uf];
  {
    const double golden = (std::sqrt(5.0) - 1) / 2;
    // a wide bracket blends in the undescended neighbors and undoes the descent
    const double q = 0.1;
    double a = arc[uf] - q * (arc[uf] - arc[uf - 1]), b = arc[uf] + q * (arc[uf + 1] - arc[uf]);
    double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
    double f1 = lagrangian_value(point_at(x1), c), f2 = lagrangian_value(point_at(x2), c);
    for (int it = 0; it < 24; ++it) {
      if (f1 > f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - golden * (b - a);
        f1 = lagrangian_value(point_at(x1), c);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + golden * (b - a);
        f2 = lagrangian_value(point_at(x2), c);
      }
    }
    const double xm = f1 > f2 ? x1 : x2;
    const double fm = std::max(f1, f2);
    if (fm > top_val) {
      top = point_at(xm);
      top_val = fm;
      s_fixed = xm;
    }
  }
  if (!(s_fixed > 0) || !(total > s_fixed)) return;
  Index m = static_cast<Index>(std::llround(static_cast<double>(count - 1) * s_fixed / total));
  m = std::clamp<Index>(m, 1, count - 2);

  std::vector<Field> out(static_cast<std::size_t>(count));
  std::vector<double> out_vals(static_cast<std::size_t>(count));
  for (Index j = 0; j < count; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    if (j == 0) {
      out[uj] = nodes.front();
      out_vals[uj] = vals.front();
    } else if (j == m) {
      out[uj] = top;
      out_vals[uj] = top_val;
    } else if (j == count - 1) {
      out[uj] = nodes.back();
      out_vals[uj] = vals.back();
    } else {
      const double target = j < m ? s_fixed * static_cast<double>(j) / static_cast<double>(m)
                                  : s_fixed + (total - s_fixed) * static_cast<double>(j - m) /
                                                  static_cast<double>(count - 1 - m);
      out[uj] = point_at(target);
      out_vals[uj] = lagrangian_value(out[uj], c);
    }
  }
  nodes = std::move(out);
  vals = std::move(out_vals);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(c > 0 && c < kSqrt2)) throw ConfigError("speed c must lie in (0, sqrt 2)");
  if (dim != 2 && dim != 3) throw ConfigError("solve needs dim 2 or 3");
  if (path_nodes < 3) throw ConfigError("path_nodes must be at least 3");
  if (!(descent_tol > 0) || !(newton_tol > 0)) throw ConfigError("tolerances must be positive");
  if (!(descent_tol > newton_tol)) throw ConfigError("descent_tol must exceed newton_tol");
  if (max_descent_iters < 0 || max_newton_iters < 0) throw ConfigError("iteration limits must be non-negative");
  if (!(seed_amplitude > 0)) throw ConfigError("seed_amplitude must be positive");
  (void)grid();
}

Grid SolverConfig::grid() const { return make_grid(dim, N, M, h, bc); }

Path::Path(std::vector<Field> nodes, double c) : nodes_(std::move(nodes)), c_(c) {
  if (nodes_.size() < 3) throw ContractViolation("a path needs at least 3 nodes");
  const Grid& g = nodes_.front().grid();
  for (const Field& f : nodes_) {
    if (!(f.grid() == g)) throw ContractViolation("path nodes must share one grid");
  }
  if (!(nodes_.front().values().array() == Complex(1, 0)).all()) {
    throw ContractViolation("path node 0 must be the constant 1");
  }
  if (!(lagrangian_value(nodes_.back(), c) < 0)) throw ContractViolation("path endpoint must have I^c < 0");
}

Path Path::straight(const Field& endpoint, double c, Index count) {
  if (count < 3) throw ContractViolation("a path needs at least 3 nodes");
  const Grid& g = endpoint.grid();
  const Field one = Field::constant(g, Complex(1, 0));
  std::vector<Field> nodes;
  nodes.push_back(one);
  const Field d = difference(endpoint, one);
  for (Index k = 1; k + 1 < count; ++k) nodes.push_back(axpy(one, static_cast<double>(k) / (count - 1), d));
  nodes.push_back(endpoint);
  return Path(std::move(nodes), c);
}

Path Path::through(const Field& via, const Field& endpoint, double c, Index count) {
  if (count < 3) throw ContractViolation("a path needs at least 3 nodes");
  const Grid& g = endpoint.grid();
  const Field one = Field::constant(g, Complex(1, 0));
  const Index mid = (count - 1) / 2;
  std::vector<Field> nodes;
  nodes.push_back(one);
  const Field d1 = difference(via, one);
  for (Index k = 1; k < mid; ++k) nodes.push_back(axpy(one, static_cast<double>(k) / mid, d1));
  nodes.push_back(via);
  const Field d2 = difference(endpoint, via);
  for (Index k = mid + 1; k + 1 < count; ++k) {
    nodes.push_back(axpy(via, static_cast<double>(k - mid) / (count - 1 - mid), d2));
  }
  nodes.push_back(endpoint);
  return Path(std::move(nodes), c);
}

Field construct_endpoint(double c, const Grid& g, double seed_amplitude, double* separation) {
  if (!(c > 0 && c < kSqrt2)) throw ConfigError("construct_endpoint: speed c must lie in (0, sqrt 2)");
  if (g.dim < 2) throw ConfigError("construct_endpoint: no endpoint with negative Lagrangian exists in 1-D");
  if (!(seed_amplitude > 0)) throw ConfigError("construct_endpoint: seed_amplitude must be positive");
  const double window = 2.0;
  const double target = -0.1;
  // each vortex keeps two healing lengths of core plus the window away from the transverse faces
  const double limit = g.bc_transverse == TransverseBc::dirichlet_one ? 2 * (g.half_length_transverse - window - 2)
                                                                       : g.half_length_transverse;
  auto oriented = [&](double d) {
    Field f = pair_field(g, d, window);
    if (momentum(f) < 0) {
      f = f.conj();
      f.set_dirichlet_boundary(Complex(1, 0));  // conj leaves -0 imaginary parts
    }
    return f;
  };
  if (seed_amplitude > limit) throw NonConvergence("endpoint construction failed: seed separation exceeds the box");

  double d = seed_amplitude;
  double largest = d;
  for (int tries = 0; tries < 60 && d <= limit; ++tries, d *= 1.5) {
    largest = d;
    const Field f = oriented(d);
    if (lagrangian_value(f, c) < target) {
      if (separation) *separation = d;
      return f;
    }
  }

  // Relax the widest admissible pair by H1 descent on I^c; the box boundary costs energy that
  // the descent recovers.
  Field f = oriented(largest);
  const SobolevPreconditioner s(g);
  FunctionalReport rep = lagrangian(f, c);
  for (int it = 0; it < 400 && rep.lagrangian >= target; ++it) {
    const Field r = el_residual(f, c);
    if (r.max_abs() < 1e-4) break;
    const Field dir = s.apply(r);
    const double slope = s.inner(dir, dir);
    bool accepted = false;
    for (double delta = 0.5; delta > 1e-8; delta /= 2) {
      Field trial = axpy(f, delta, dir);
      const FunctionalReport tr = lagrangian(trial, c);
      if (tr.lagrangian <= rep.lagrangian - 1e-4 * delta * slope) {
        f = std::move(trial);
        rep = tr;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (rep.lagrangian < target) {
    if (separation) *separation = largest;
    return f;
  }
  throw NonConvergence("endpoint construction failed: widest admissible vortex separation " + std::to_string(largest) +
                       " relaxes to I^c = " + std::to_string(rep.lagrangian) + " with momentum P = " +
                       std::to_string(rep.momentum) + (rep.momentum > 0 ? " (P > 0)" : " (P <= 0)"));
}

Path refine_path(const Path& path) {
  const double c = path.c();
  std::vector<double> vals;
  for (const Field& f : path.nodes()) vals.push_back(lagrangian_value(f, c));
  const double top = *std::max_element(vals.begin(), vals.end());
  std::vector<Field> out;
  for (Index k = 0; k < path.size(); ++k) {
    const auto uk = static_cast<std::size_t>(k);
    out.push_back(path.nodes()[uk]);
    if (k + 1 < path.size() && std::abs(vals[uk + 1] - vals[uk]) > 0.1 * std::abs(top)) {
      out.emplace_back(path.grid(), 0.5 * (path.nodes()[uk].values() + path.nodes()[uk + 1].values()));
    }
  }
  return Path(std::move(out), c);
}

double gamma_estimate(const Path& path) {
  const Path refined = refine_path(path);
  double top = -std::numeric_limits<double>::infinity();
  for (const Field& f : refined.nodes()) top = std::max(top, lagrangian_value(f, path.c()));
  return top;
}

Field mountain_pass_descend(Path& path, const SolverConfig& config, DescentStats* stats) {
  DescentStats local;
  DescentStats& st = stats ? *stats : local;
  st = DescentStats{};
  const double c = path.c();
  const Grid& g = path.grid();
  const SobolevPreconditioner s(g);
  std::vector<Field>& nodes = path.mutable_nodes();
  std::vector<double> vals;
  for (const Field& f : nodes) vals.push_back(lagrangian_value(f, c));
  const Index count = path.size();
  int consecutive_failures = 0;

  auto top_node = [&]() {
    Index best = 1;
    for (Index k = 2; k + 1 < count; ++k) {
      if (vals[static_cast<std::size_t>(k)] > vals[static_cast<std::size_t>(best)]) best = k;
    }
    return best;
  };
  auto path_max = [&]() { return *std::max_element(vals.begin(), vals.end()); };

  for (;;) {
    const Index k = top_node();
    const auto uk = static_cast<std::size_t>(k);
    const Field r = el_residual(nodes[uk], c);
    st.final_residual = r.max_abs();
    if (st.final_residual <= config.descent_tol) return nodes[uk];
    if (st.iterations >= config.max_descent_iters) {
      throw SolverNonConvergence("mountain-pass descent reached max_descent_iters with residual " +
                                     std::to_string(st.final_residual),
                                 nodes[uk]);
    }
    const double before = path_max();
    st.max_before_step.push_back(before);
    const Field grad = s.apply(r);
    const Field tangent = difference(nodes[uk + 1], nodes[uk - 1]);
    const double tt = s.inner(tangent, tangent);
    const double along = tt > 0 ? s.inner(grad, tangent) / tt : 0.0;
    const Field dir = axpy(grad, -along, tangent);
    const double slope = s.inner(dir, dir);

    bool accepted = false;
    for (double delta = 0.5; delta > 1e-12; delta /= 2) {
      Field trial = axpy(nodes[uk], delta, dir);
      const double value = lagrangian_value(trial, c);
      if (value <= vals[uk] - 1e-4 * delta * slope) {
        nodes[uk] = std::move(trial);
        vals[uk] = value;
        accepted = true;
        break;
      }
    }
    ++st.iterations;
    if (accepted) {
      consecutive_failures = 0;
    } else {
      ++st.line_search_failures;
      if (++consecutive_failures > 5) {
        throw SolverNonConvergence("mountain-pass descent stalled: line search failed repeatedly", nodes[uk]);
      }
    }
    const double after = path_max();
    if (after > before) st.max_never_increased = false;
    st.max_history.push_back(after);
    if (st.iterations % 20 == 0 || !accepted) {
      reparametrize(nodes, vals, top_node(), s, c);
      ++st.reparametrizations;
    }
  }
}

Field newton_refine(const Field& candidate, double c, const SolverConfig& config, NewtonStats* stats) {
  NewtonStats local;
  NewtonStats& st = stats ? *stats : local;
  st = NewtonStats{};
  const Grid& g = candidate.grid();
  const DofMap map = make_dof_map(g);
  Field psi = candidate;
  Field best = candidate;
  double best_res = std::numeric_limits<double>::infinity();
  int increases = 0;

  for (;;) {
    const Field r = el_residual(psi, c);
    const double rn = r.max_abs();
    st.residual_history.push_back(rn);
    if (rn < best_res) {
      best_res = rn;
      best = psi;
    }
    if (rn <= config.newton_tol) {
      st.trivial = energy(psi) <= 1e-8;
      return psi;
    }
    if (st.iterations >= config.max_newton_iters) {
      throw SolverNonConvergence("Newton reached max_newton_iters with residual " + std::to_string(rn), best);
    }
    const SparseMatrix hess = assemble_hessian(psi, c, map);
    AbsLdltPreconditioner m;
    m.factor(hess, 1e-8);
    LinearSolveStats ls;
    const Eigen::VectorXd dx = minres_solve(hess, to_dofs(r, map), m, 1e-6, 2000, &ls);
    st.linear_iterations += ls.iterations;
    const Field step = from_dofs(g, map, dx, Complex(0, 0));

    const double base_norm = interior_vector(r).norm();
    Field chosen = axpy(psi, 1.0, step);
    double chosen_norm = interior_vector(el_residual(chosen, c)).norm();
    for (double t = 0.5; chosen_norm >= base_norm && t >= 1.0 / 32; t /= 2) {
      Field trial = axpy(psi, t, step);
      const double n = interior_vector(el_residual(trial, c)).norm();
      if (n < chosen_norm) {
        chosen = std::move(trial);
        chosen_norm = n;
      }
    }
    ++st.iterations;
    if (chosen_norm >= base_norm) {
      if (++increases >= 3) {
        throw SolverNonConvergence("Newton diverged: residual increased over 3 consecutive steps", best);
      }
    } else {
      increases = 0;
    }
    psi = std::move(chosen);
  }
}

Field seeded_perturbation(const Grid& g, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  struct Bump {
    std::array<double, 3> x;
    double w;
    Complex a;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 4; ++b) {
    Bump bump{};
    bump.x = {0.5 * g.half_length_x1 * uni(rng), 0.5 * g.half_length_transverse * uni(rng),
              0.5 * g.half_length_transverse * uni(rng)};
    bump.w = 1.5 + 0.5 * uni(rng);
    bump.a = Complex(uni(rng), uni(rng));
    bumps.push_back(bump);
  }
  Field f = Field::sample(g, [&](double x1, double x2, double x3) {
    const double xs[3] = {x1, x2, x3};
    Complex sum(0, 0);
    for (const Bump& b : bumps) {
      double r2 = 0;
      for (int a = 0; a < g.dim; ++a) r2 += (xs[a] - b.x[static_cast<std::size_t>(a)]) * (xs[a] - b.x[static_cast<std::size_t>(a)]);
      sum += b.a * std::exp(-r2 / (b.w * b.w));
    }
    return sum * boundary_window(g, x1, x2, x3, 1.0);
  });
  f.set_dirichlet_boundary(Complex(0, 0));
  const double top = f.max_abs();
  if (top > 0) f.values() *= amplitude / top;
  return f;
}

SolveReport solve(const SolverConfig& config, const Field* warm_start) {
  config.validate();
  SolveReport rep;
  rep.config = config;
  const Grid g = config.grid();
  const double c = config.c;
  const Field endpoint = construct_endpoint(c, g, config.seed_amplitude, &rep.endpoint_separation);

  std::optional<Path> path;
  if (warm_start && warm_start->grid() == g && warm_start->boundary_equals(Complex(1, 0))) {
    path.emplace(Path::through(*warm_start, endpoint, c, config.path_nodes));
  } else {
    if (warm_start) rep.warnings.emplace_back("warm start ignored: grid or boundary data differ");
    path.emplace(Path::straight(endpoint, c, config.path_nodes));
  }

  // symmetry-breaking perturbation of the initial highest node
  {
    auto& nodes = path->mutable_nodes();
    Index top = 1;
    double top_val = -std::numeric_limits<double>::infinity();
    for (Index k = 1; k + 1 < path->size(); ++k) {
      const double v = lagrangian_value(nodes[static_cast<std::size_t>(k)], c);
      if (v > top_val) {
        top_val = v;
        top = k;
      }
    }
    Field& node = nodes[static_cast<std::size_t>(top)];
    node.values() += seeded_perturbation(g, config.rng_seed, 1e-4).values();
  }

  Field candidate;
  try {
    candidate = mountain_pass_descend(*path, config, &rep.descent);
    rep.descent_converged = true;
  } catch (const SolverNonConvergence& e) {
    candidate = e.best();
    rep.warnings.emplace_back(e.what());
  }
  rep.gamma_estimate = gamma_estimate(*path);
  for (const Field& f : path->nodes()) rep.path_profile.push_back(lagrangian_value(f, c));

  try {
    rep.field = newton_refine(candidate, c, config, &rep.newton);
    rep.converged = true;
  } catch (const SolverNonConvergence& e) {
    rep.field = e.best();
    rep.warnings.emplace_back(e.what());
  }
  if (rep.newton.trivial) {
    rep.trivial = true;
    rep.converged = false;
    rep.warnings.emplace_back("Newton collapsed to the trivial solution psi = 1");
  }

  const Field& f = rep.field;
  rep.functional = lagrangian(f, c);
  rep.residual = el_residual(f, c).max_abs();
  rep.pohozaev = pohozaev_residuals(f, c);
  rep.vortices = vortex_detect(f);
  if (config.compute_morse) rep.morse_index = morse_index(f, c).negative_count;

  Index arg = 0;
  for (Index p = 0; p < f.size(); ++p) {
    const double m = std::abs(f[p]);
    rep.max_modulus = std::max(rep.max_modulus, m);
    if (std::abs(1 - m) > rep.max_deviation) {
      rep.max_deviation = std::abs(1 - m);
      arg = p;
    }
  }
  const double x1 = g.coordinate(0, g.unflatten(arg)[0]);
  rep.boundary_distance_ratio = (g.half_length_x1 - std::abs(x1)) / g.half_length_x1;

  if (rep.converged) {
    if (!(rep.functional.lagrangian > 0)) rep.warnings.emplace_back("converged solution has I^c <= 0");
    if (rep.max_modulus > std::sqrt(1 + c * c / 4) + 5e-3) rep.warnings.emplace_back("L-infinity bound violated");
    if (rep.max_deviation < 0.4 * (1 - c / kSqrt2) - 5e-3) rep.warnings.emplace_back("non-vanishing bound violated");
    if (rep.boundary_distance_ratio < 0.1) rep.warnings.emplace_back("solution concentrates near the x1 boundary");
    if (rep.morse_index && *rep.morse_index > 1) rep.warnings.emplace_back("Morse index exceeds 1");
  }
  return rep;
}

SweepTable sweep(const std::vector<double>& c_values, const std::vector<double>& N_values, const SolverConfig& base,
                 int threads) {
  for (std::size_t k = 0; k < c_values.size(); ++k) {
    if (!(c_values[k] > 0 && c_values[k] < kSqrt2)) throw ConfigError("sweep: every c must lie in (0, sqrt 2)");
    if (k > 0 && !(c_values[k] > c_values[k - 1])) throw ConfigError("sweep: c values must be strictly increasing");
  }
  SweepTable table;
  if (c_values.empty() || N_values.empty()) return table;

  const std::size_t nc = c_values.size();
  std::vector<SweepRow> cells(nc * N_values.size());
  auto run_chain = [&](std::size_t n_index) {
    std::optional<Field> previous;
    for (std::size_t k = 0; k < nc; ++k) {
      SweepRow& row = cells[n_index * nc + k];
      row.c = c_values[k];
      row.N = N_values[n_index];
      SolverConfig cfg = base;
      cfg.c = row.c;
      cfg.N = row.N;
      try {
        const SolveReport rep = solve(cfg, previous ? &*previous : nullptr);
        row.gamma = rep.gamma_estimate;
        row.sigma = rep.gamma_estimate / row.c;
        row.energy = rep.functional.energy;
        row.momentum = rep.functional.momentum;
        row.lagrangian = rep.functional.lagrangian;
        row.morse_index = rep.morse_index;
        row.converged = rep.converged;
        if (rep.converged) {
          previous = rep.field;
        } else {
          previous.reset();
        }
      } catch (const std::exception& e) {
        row.error = e.what();
        row.gamma = row.sigma = row.energy = row.momentum = row.lagrangian = std::numeric_limits<double>::quiet_NaN();
        previous.reset();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, N_values.size());
  if (workers == 1) {
    for (std::size_t n = 0; n < N_values.size(); ++n) run_chain(n);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t n = next++; n < N_values.size(); n = next++) run_chain(n);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t n = 0; n < N_values.size(); ++n) {
    for (std::size_t k = 1; k < nc; ++k) {
      const SweepRow& prev = cells[n * nc + k - 1];
      SweepRow& row = cells[n * nc + k];
      if (prev.error.empty() && row.error.empty() && row.sigma > prev.sigma * 1.02) {
        row.flags.emplace_back("sigma_increase");
      }
    }
  }
  for (std::size_t k = 0; k < nc && N_values.size() > 1; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool complete = true;
    for (std::size_t n = 0; n < N_values.size(); ++n) {
      const SweepRow& row = cells[n * nc + k];
      if (!row.error.empty()) complete = false;
      lo = std::min(lo, row.energy);
      hi = std::max(hi, row.energy);
    }
    if (complete && hi - lo > 0.1 * std::max(std::abs(hi), std::abs(lo))) {
      for (std::size_t n = 0; n < N_values.size(); ++n) cells[n * nc + k].flags.emplace_back("energy_variation");
    }
  }

  for (std::size_t k = 0; k < nc; ++k) {
    for (std::size_t n = 0; n < N_values.size(); ++n) table.rows.push_back(cells[n * nc + k]);
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.c != b.c ? a.c < b.c : a.N < b.N; });
  return table;
}

}  // namespace gpwaves
