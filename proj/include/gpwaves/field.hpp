#pragma once

#include <Eigen/Core>

#include <complex>
#include <utility>

#include "gpwaves/grid.hpp"

namespace gpwaves {

/// Complex samples of psi on a grid, row-major, boundary samples included.
template <typename Scalar>
class BasicField {
 public:
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  using GridType = BasicGrid<Scalar>;

  BasicField() = default;
  explicit BasicField(GridType grid) : grid_(std::move(grid)), values_(Vector::Zero(grid_.size())) {}
  BasicField(GridType grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw ContractViolation("field size does not match its grid");
    }
  }

  static BasicField constant(const GridType& grid, Complex value) {
    return BasicField(grid, Vector::Constant(grid.size(), value));
  }

  /// Sample a callable f(x1, x2, x3) -> complex at every grid point.
  template <typename F>
  static BasicField sample(const GridType& grid, F&& f) {
    BasicField out(grid);
    for (Index i = 0; i < grid.counts[0]; ++i) {
      const Scalar x1 = grid.coordinate(0, i);
      for (Index j = 0; j < grid.counts[1]; ++j) {
        const Scalar x2 = grid.coordinate(1, j);
        for (Index k = 0; k < grid.counts[2]; ++k) {
          out.values_[grid.flatten(i, j, k)] = Complex(f(x1, x2, grid.coordinate(2, k)));
        }
      }
    }
    return out;
  }

  const GridType& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Index size() const { return values_.size(); }

  Complex operator[](Index p) const { return values_[p]; }
  Complex& operator[](Index p) { return values_[p]; }

  BasicField conj() const { return BasicField(grid_, values_.conjugate()); }

  /// Overwrite every Dirichlet boundary sample with `value`.
  void set_dirichlet_boundary(Complex value = Complex(1, 0)) {
    for (Index p = 0; p < size(); ++p) {
      if (grid_.on_dirichlet_boundary(p)) values_[p] = value;
    }
  }

  /// Whether every Dirichlet boundary sample equals `value` exactly.
  bool boundary_equals(Complex value) const {
    for (Index p = 0; p < size(); ++p) {
      if (grid_.on_dirichlet_boundary(p) && values_[p] != value) return false;
    }
    return true;
  }

  Scalar max_abs() const { return size() ? values_.cwiseAbs().maxCoeff() : Scalar(0); }

 private:
  GridType grid_;
  Vector values_;
};

/// Real samples on a grid (densities, moduli, phases).
template <typename Scalar>
struct BasicScalarField {
  BasicGrid<Scalar> grid;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
};

using Field = BasicField<double>;
using ScalarField = BasicScalarField<double>;
using Complex = std::complex<double>;

}  // namespace gpwaves
