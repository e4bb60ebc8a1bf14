#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gpwaves/functionals.hpp"
#include "gpwaves/morse.hpp"
#include "test_support.hpp"

using namespace gpwaves;

TEST_CASE("the constant 1 is a local minimum for subsonic speeds") {
  const Grid g = make_grid(2, 4.0, 4.0, 0.5);
  const Field one = Field::constant(g, Complex(1, 0));
  for (double c : {0.0, 1.0, 1.4}) {
    const SpectrumReport dense = morse_index(one, c);
    CHECK(dense.method == SpectrumMethod::dense_factorization);
    CHECK(dense.negative_count == 0);
    CHECK(dense.smallest_eigs.front() > 0);
    MorseOptions sparse_opt;
    sparse_opt.dense_limit = 0;
    const SpectrumReport sparse = morse_index(one, c, sparse_opt);
    CHECK(sparse.method == SpectrumMethod::sparse_factorization);
    CHECK(sparse.negative_count == 0);
    CHECK(sparse.eigs_converged);
  }
}

TEST_CASE("dense and sparse counts agree and Lanczos matches the dense spectrum") {
  const Grid g = make_grid(2, 4.0, 4.0, 0.4);
  // a low-modulus base has several negative directions
  Field base = testing::random_smooth_field(g, 21, 1.2);
  base.values() *= 0.3;
  const double c = 0.7;
  const SpectrumReport dense = morse_index(base, c);
  MorseOptions opt;
  opt.dense_limit = 0;
  const SpectrumReport sparse = morse_index(base, c, opt);
  CHECK(dense.negative_count > 0);
  CHECK(sparse.negative_count == dense.negative_count);
  CHECK(sparse.count_below_lower == dense.count_below_lower);
  CHECK(sparse.count_below_upper == dense.count_below_upper);
  REQUIRE(sparse.smallest_eigs.size() == dense.smallest_eigs.size());
  for (std::size_t k = 0; k < dense.smallest_eigs.size(); ++k) {
    CHECK(std::abs(sparse.smallest_eigs[k] - dense.smallest_eigs[k]) <= 1e-7 * (1 + std::abs(dense.smallest_eigs[k])));
  }
  CHECK(sparse.warning.empty());
}

TEST_CASE("the count is monotone in the cutoff") {
  const Grid g = make_grid(2, 4.0, 4.0, 0.5);
  const Field base = testing::random_smooth_field(g, 4, 1.0);
  Index prev = -1;
  for (double cutoff = -1.5; cutoff <= 1.0; cutoff += 0.25) {
    MorseOptions opt;
    opt.cutoff = cutoff;
    const SpectrumReport r = morse_index(base, 0.5, opt);
    CHECK(r.negative_count >= prev);
    CHECK(r.count_below_lower <= r.negative_count);
    CHECK(r.count_below_upper >= r.negative_count);
    prev = r.negative_count;
  }
}

TEST_CASE("stretched linearized solutions are negative directions of circular waves") {
  for (auto [c, rho2] : {std::pair{0.0, 0.5}, std::pair{1.0, 0.75}}) {
    const CircularParams p = make_circular(c, std::sqrt(rho2));
    const double spacing = conjugate_spacing(p);
    const Grid g = line_grid(20.0, 0.05);
    const Field base = sample_circular(g, p);
    // the unstretched kernel element has Q close to zero, stretching makes it negative
    const double q0 = hessian_quadratic(base, c, conjugate_test_function(g, p, -spacing / 2, 1.0));
    CHECK(std::abs(q0) <= 5e-2);
    for (double stretch : {0.7, 0.75, 0.8}) {
      for (double start : {-19.0, -3.3, 5.0}) {
        const Field tau = conjugate_test_function(g, p, start, stretch);
        CHECK(tau.boundary_equals(Complex(0, 0)));
        CHECK(hessian_quadratic(base, c, tau) < 0);
      }
    }
  }
}

TEST_CASE("circular wave Morse count against disjoint negative directions") {
  const CircularParams p = make_circular(0.0, std::sqrt(0.5));
  const double length = 40;
  const Grid g = line_grid(length / 2, 0.1);
  const Field base = sample_circular(g, p);
  const double support = conjugate_spacing(p) / 0.75;
  // disjoint supports certify a negative-definite subspace of that dimension
  Index certified = 0;
  for (double start = -length / 2 + 0.05; start + support < length / 2 - 0.05; start += support + 0.2) {
    CHECK(hessian_quadratic(base, 0.0, conjugate_test_function(g, p, start, 0.75)) < 0);
    ++certified;
  }
  const SpectrumReport r = morse_index(base, 0.0);
  CHECK(r.negative_count >= certified);
  CHECK(r.negative_count >= 5);
}

TEST_CASE("transverse extension of a negative direction") {
  const CircularParams p = make_circular(0.0, std::sqrt(0.5));
  const double h = 0.1;
  const Grid line = line_grid(8.0, h);
  const Grid slab = make_grid(2, 8.0, 16.0, h);
  const Field tau = conjugate_test_function(line, p, -4.0, 0.75);
  const double q1 = hessian_quadratic(sample_circular(line, p), 0.0, tau);
  REQUIRE(q1 < 0);
  const double tau2 = real_pairing(tau, tau);

  // normalized cos^2 bump of half-width w in x2
  const double w = 15.0;
  auto bump = [&](double x2) {
    return std::abs(x2) < w ? std::pow(std::cos(std::numbers::pi * x2 / (2 * w)), 2) : 0.0;
  };
  double chi2 = 0, grad2 = 0;
  for (Index j = 0; j < slab.counts[1]; ++j) {
    const double x = slab.coordinate(1, j);
    chi2 += h * bump(x) * bump(x);
    if (j + 1 < slab.counts[1]) grad2 += h * std::pow((bump(x + h) - bump(x)) / h, 2);
  }
  const double norm = std::sqrt(chi2);
  grad2 /= chi2;
  CHECK(grad2 <= std::abs(q1) / (2 * tau2));

  const Field base = Field::sample(slab, [&](double x1, double, double) { return circular(p, x1); });
  const Field product = Field::sample(slab, [&](double x1, double x2, double) {
    const Index i = static_cast<Index>(std::llround((x1 + 8.0) / h));
    return tau[i] * bump(x2) / norm;
  });
  const double q = hessian_quadratic(base, 0.0, product);
  CHECK(q < 0);
  CHECK(q == doctest::Approx(q1 + tau2 * grad2).epsilon(1e-10));
}

TEST_CASE("circular index scan") {
  const std::vector<double> lengths{20, 40, 80};
  for (auto [c, rho2] : {std::pair{0.0, 0.5}, std::pair{1.0, 0.75}}) {
    const CircularParams p = make_circular(c, std::sqrt(rho2));
    const auto rows = circular_index_scan(p, lengths);
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      CHECK(rows[k].meets_bound);
      CHECK(rows[k].computed >= static_cast<Index>(std::floor(rows[k].length / conjugate_spacing(p))) - 2);
      if (k > 0) CHECK(rows[k].computed > rows[k - 1].computed);
    }
    if (c == 0.0) {
      CHECK(rows[0].predicted == 2);
      CHECK(rows[1].predicted == 5);
      CHECK(rows[2].predicted == 11);
    }
  }
  const double c = 0.5;
  const double threshold = 2.0 / 3.0 * (1 + c * c / 4);
  CHECK_THROWS_AS(circular_index_scan(make_circular(c, std::sqrt(threshold)), lengths), DomainError);
}
