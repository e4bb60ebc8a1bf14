#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gpwaves/functionals.hpp"
#include "gpwaves/onedim.hpp"
#include "gpwaves/solver.hpp"
#include "test_support.hpp"

using namespace gpwaves;

namespace {

SolverConfig coarse_config() {
  SolverConfig cfg;
  cfg.c = 0.9;
  cfg.N = 8;
  cfg.M = 8;
  cfg.h = 0.2;
  cfg.path_nodes = 17;
  cfg.compute_morse = false;
  return cfg;
}

const SolveReport& coarse_solution() {
  static const SolveReport rep = solve(coarse_config());
  return rep;
}

bool bit_identical(const Field& a, const Field& b) {
  return a.grid() == b.grid() &&
         std::memcmp(a.values().data(), b.values().data(), sizeof(Complex) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("configuration validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  for (double c : {0.0, -0.5, 2.0, std::sqrt(2.0)}) {
    cfg = SolverConfig{};
    cfg.c = c;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  cfg = SolverConfig{};
  cfg.descent_tol = 1e-10;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.dim = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.path_nodes = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.h = 0.3;  // 12 / 0.3 is an integer, 12 / 0.35 is not
  CHECK_NOTHROW(cfg.validate());
  cfg.h = 0.35;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(solve(cfg), ConfigError);
}

TEST_CASE("path invariants are enforced") {
  const Grid g = make_grid(2, 6.0, 6.0, 0.25);
  const Field one = Field::constant(g, Complex(1, 0));
  const Field endpoint = construct_endpoint(1.0, g, 2.0);
  CHECK_NOTHROW(Path({one, one, endpoint}, 1.0));
  CHECK_THROWS_AS(Path({one, endpoint}, 1.0), ContractViolation);
  CHECK_THROWS_AS(Path({endpoint, one, endpoint}, 1.0), ContractViolation);
  CHECK_THROWS_AS(Path({one, one, one}, 1.0), ContractViolation);
  const Field other = Field::constant(make_grid(2, 6.0, 6.0, 0.5), Complex(1, 0));
  CHECK_THROWS_AS(Path({one, other, endpoint}, 1.0), ContractViolation);

  const Path p = Path::straight(endpoint, 1.0, 9);
  REQUIRE(p.size() == 9);
  CHECK(bit_identical(p.nodes().front(), one));
  CHECK(bit_identical(p.nodes().back(), endpoint));
  // node k of the straight path is 1 + k/8 (endpoint - 1)
  const Field expect(g, one.values() + 0.375 * (endpoint.values() - one.values()));
  CHECK((p.nodes()[3].values() - expect.values()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("endpoint construction reaches a negative Lagrangian with positive momentum") {
  const Grid g = make_grid(2, 12.0, 12.0, 0.1);
  double separation = 0;
  const Field f = construct_endpoint(1.0, g, 2.0, &separation);
  const FunctionalReport r = lagrangian(f, 1.0);
  CHECK(r.lagrangian < -0.1);
  CHECK(r.momentum > 0);
  CHECK(separation >= 2.0);
  // boundary data is exactly 1
  Field with_one = f;
  with_one.set_dirichlet_boundary(Complex(1, 0));
  CHECK(bit_identical(f, with_one));

  CHECK_THROWS_AS(construct_endpoint(0.0, g, 2.0), ConfigError);
  CHECK_THROWS_AS(construct_endpoint(1.5, g, 2.0), ConfigError);
  CHECK_THROWS_AS(construct_endpoint(1.0, make_grid(1, 12.0, 0.0, 0.1), 2.0), ConfigError);
}

TEST_CASE("gamma estimate is positive and refinement does not lower it") {
  const Grid g = make_grid(2, 8.0, 8.0, 0.2);
  const Field endpoint = construct_endpoint(0.9, g, 2.0);
  const Path coarse = Path::straight(endpoint, 0.9, 5);
  const double gamma = gamma_estimate(coarse);
  CHECK(gamma > 0);

  // straight-line maximum sampled densely by an independent scan
  const Field one = Field::constant(g, Complex(1, 0));
  double dense_max = 0;
  for (int k = 0; k <= 400; ++k) {
    const Field f(g, one.values() + (k / 400.0) * (endpoint.values() - one.values()));
    dense_max = std::max(dense_max, lagrangian(f, 0.9).lagrangian);
  }
  CHECK(gamma <= dense_max + 1e-12);

  const Path refined = refine_path(coarse);
  CHECK(refined.size() >= coarse.size());
  CHECK(gamma_estimate(refined) >= gamma - 1e-14);
  const Path fine = Path::straight(endpoint, 0.9, 65);
  CHECK(gamma_estimate(fine) >= gamma - 1e-14);
  CHECK(gamma_estimate(fine) <= dense_max + 1e-12);
}

TEST_CASE("seeded perturbation is deterministic and vanishes on the boundary") {
  const Grid g = make_grid(2, 6.0, 4.0, 0.25);
  const Field a = seeded_perturbation(g, 7, 1e-3);
  const Field b = seeded_perturbation(g, 7, 1e-3);
  const Field c = seeded_perturbation(g, 8, 1e-3);
  CHECK(bit_identical(a, b));
  CHECK_FALSE(bit_identical(a, c));
  CHECK(a.max_abs() == doctest::Approx(1e-3).epsilon(1e-12));
  Field z = a;
  z.set_dirichlet_boundary(Complex(0, 0));
  CHECK(bit_identical(a, z));
}

TEST_CASE("Newton converges quadratically on a perturbed 1-D soliton") {
  const Grid g = line_grid(10.0, 0.05);
  const Field exact = sample_soliton(g, SolitonParams{0.8, 0});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1e-3, 1e-3);
  Field noisy = exact;
  for (Index i = 1; i + 1 < g.size(); ++i) noisy.values()[i] += Complex(uni(rng), uni(rng));
  SolverConfig cfg;
  NewtonStats st;
  const Field out = newton_refine(noisy, 0.8, cfg, &st);
  CHECK(el_residual(out, 0.8).max_abs() <= 1e-9);
  CHECK(st.iterations <= 8);
  CHECK_FALSE(st.trivial);
  // the discrete solution stays within discretization error of the exact profile
  CHECK((out.values() - exact.values()).cwiseAbs().maxCoeff() <= 1e-2);
  // boundary data is held fixed
  CHECK(out.values()[0] == noisy.values()[0]);
  CHECK(out.values()[g.size() - 1] == noisy.values()[g.size() - 1]);
}

TEST_CASE("the constant is a Newton fixed point flagged trivial") {
  const Grid g = make_grid(2, 4.0, 4.0, 0.25);
  const Field one = Field::constant(g, Complex(1, 0));
  NewtonStats st;
  const Field out = newton_refine(one, 0.9, SolverConfig{}, &st);
  CHECK(st.trivial);
  CHECK(st.iterations == 0);
  CHECK(bit_identical(out, one));
}

TEST_CASE("Newton reports the best iterate when it cannot converge") {
  const Grid g = make_grid(2, 4.0, 4.0, 0.25);
  const Field start = testing::random_smooth_field(g, 3, 0.8);
  SolverConfig cfg;
  cfg.max_newton_iters = 1;
  try {
    newton_refine(start, 0.9, cfg);
  } catch (const SolverNonConvergence& e) {
    CHECK(e.best().grid() == g);
    CHECK(el_residual(e.best(), 0.9).max_abs() <= el_residual(start, 0.9).max_abs());
    return;
  }
  // a single step from a random field converging to 1e-9 would be remarkable
  FAIL("expected SolverNonConvergence");
}

TEST_CASE("coarse end-to-end solve") {
  const SolveReport& rep = coarse_solution();
  CHECK(rep.converged);
  CHECK(rep.descent_converged);
  CHECK_FALSE(rep.trivial);
  CHECK(rep.residual <= 1e-9);
  CHECK(rep.functional.lagrangian > 0);
  CHECK(rep.gamma_estimate >= rep.functional.lagrangian - 0.05 * rep.functional.lagrangian);
  CHECK(rep.descent.max_never_increased);
  REQUIRE(rep.descent.max_history.size() == static_cast<std::size_t>(rep.descent.iterations));
  REQUIRE(rep.descent.max_before_step.size() == rep.descent.max_history.size());
  for (std::size_t k = 0; k < rep.descent.max_history.size(); ++k) {
    CHECK(rep.descent.max_history[k] <= rep.descent.max_before_step[k]);
  }
  CHECK(rep.path_profile.size() >= 17);
  CHECK(rep.path_profile.front() == 0.0);
  CHECK(rep.path_profile.back() < 0);
  CHECK(rep.max_modulus <= std::sqrt(1 + 0.81 / 4) + 5e-3);
}

TEST_CASE("a path already through a critical point needs no descent") {
  const SolveReport& rep = coarse_solution();
  REQUIRE(rep.converged);
  const Grid& g = rep.field.grid();
  const Field one = Field::constant(g, Complex(1, 0));
  const Field half(g, 0.5 * (one.values() + rep.field.values()));
  const Field endpoint = construct_endpoint(0.9, g, 2.0);
  REQUIRE(lagrangian(half, 0.9).lagrangian < rep.functional.lagrangian);
  Path p({one, half, rep.field, endpoint}, 0.9);
  DescentStats st;
  SolverConfig cfg = coarse_config();
  const Field top = mountain_pass_descend(p, cfg, &st);
  CHECK(st.iterations == 0);
  CHECK(bit_identical(top, rep.field));
}

TEST_CASE("solve is deterministic") {
  const SolveReport a = solve(coarse_config());
  const SolveReport& b = coarse_solution();
  CHECK(bit_identical(a.field, b.field));
  CHECK(a.functional.lagrangian == b.functional.lagrangian);
  CHECK(a.descent.iterations == b.descent.iterations);
}

TEST_CASE("warm start from a solution at the same speed") {
  const SolveReport& cold = coarse_solution();
  REQUIRE(cold.converged);
  const SolveReport warm = solve(coarse_config(), &cold.field);
  CHECK(warm.converged);
  CHECK(warm.descent.iterations <= cold.descent.iterations);
  CHECK(warm.functional.lagrangian == doctest::Approx(cold.functional.lagrangian).epsilon(1e-6));
}

TEST_CASE("sweep tables") {
  CHECK(sweep({}, {}, coarse_config()).rows.empty());
  CHECK(sweep({0.9}, {}, coarse_config()).rows.empty());

  SolverConfig base = coarse_config();
  CHECK_THROWS_AS(sweep({1.0, 0.9}, {8}, base), ConfigError);
  CHECK_THROWS_AS(sweep({0.9, 1.5}, {8}, base), ConfigError);
  const SweepTable t = sweep({0.9, 1.0}, {8, 6}, base, 2);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].c == 0.9);
  CHECK(t.rows[0].N == 6);
  CHECK(t.rows[1].N == 8);
  CHECK(t.rows[3].c == 1.0);
  for (const SweepRow& row : t.rows) {
    CHECK(row.error.empty());
    CHECK(row.converged);
    CHECK(row.sigma == doctest::Approx(row.gamma / row.c));
    CHECK(row.lagrangian == doctest::Approx(row.energy - row.c * row.momentum).epsilon(1e-12));
    CHECK_FALSE(row.morse_index.has_value());
  }
}
