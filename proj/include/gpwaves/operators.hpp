#pragma once

#include <Eigen/Core>

#include <vector>

#include "gpwaves/field.hpp"

namespace gpwaves {

/// Sum in a fixed binary tree over storage order. The tree depends only on n, so the result is
/// bitwise reproducible for a given input sequence.
template <typename Scalar>
Scalar pairwise_sum(const Scalar* data, Index n) {
  if (n <= 8) {
    Scalar s = 0;
    for (Index i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const Index half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <typename Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& v) {
  const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> tmp = v.derived();
  return pairwise_sum(tmp.data(), tmp.size());
}

/// Tensor-product quadrature weights, one per sample.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> quadrature_weights(const BasicGrid<Scalar>& g) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(g.size());
  for (Index i = 0; i < g.counts[0]; ++i) {
    const Scalar wi = g.weight(0, i);
    for (Index j = 0; j < g.counts[1]; ++j) {
      const Scalar wij = wi * g.weight(1, j);
      for (Index k = 0; k < g.counts[2]; ++k) w[g.flatten(i, j, k)] = wij * g.weight(2, k);
    }
  }
  return w;
}

/// Trapezoidal quadrature on Dirichlet axes, rectangle rule on periodic axes.
template <typename Scalar, typename Derived>
Scalar integrate(const BasicGrid<Scalar>& g, const Eigen::MatrixBase<Derived>& density) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weighted =
      quadrature_weights(g).cwiseProduct(density.derived());
  return pairwise_sum(weighted.data(), weighted.size());
}

template <typename Scalar>
Scalar integrate(const BasicScalarField<Scalar>& density) {
  return integrate(density.grid, density.values);
}

/// First derivatives along every active axis. Second-order centered differences in the
/// interior, second-order one-sided differences at Dirichlet ends, wrap-around on periodic axes.
template <typename Scalar>
std::vector<BasicField<Scalar>> gradient(const BasicField<Scalar>& f) {
  using C = std::complex<Scalar>;
  const auto& g = f.grid();
  const Scalar inv2h = Scalar(1) / (2 * g.spacing);
  std::vector<BasicField<Scalar>> out;
  for (int a = 0; a < g.dim; ++a) {
    BasicField<Scalar> d(g);
    const Index n = g.counts[a];
    const Index s = g.stride(a);
    for (Index p = 0; p < g.size(); ++p) {
      const auto idx = g.unflatten(p);
      const Index i = idx[a];
      C val;
      if (g.is_periodic(a)) {
        const Index up = p + (i + 1 < n ? s : -(n - 1) * s);
        const Index dn = p + (i > 0 ? -s : (n - 1) * s);
        val = (f[up] - f[dn]) * inv2h;
      } else if (n < 3) {
        val = C(0);
      } else if (i == 0) {
        val = (Scalar(-3) * f[p] + Scalar(4) * f[p + s] - f[p + 2 * s]) * inv2h;
      } else if (i == n - 1) {
        val = (Scalar(3) * f[p] - Scalar(4) * f[p - s] + f[p - 2 * s]) * inv2h;
      } else {
        val = (f[p + s] - f[p - s]) * inv2h;
      }
      d[p] = val;
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Forward difference (f[i+1] - f[i]) / h along `axis`; zero in the last slot of a Dirichlet axis.
template <typename Scalar>
BasicField<Scalar> forward_difference(const BasicField<Scalar>& f, int axis) {
  const auto& g = f.grid();
  BasicField<Scalar> d(g);
  for (Index p = 0; p < g.size(); ++p) {
    const Index q = g.neighbor(g.unflatten(p), axis, +1);
    if (q >= 0) d[p] = (f[q] - f[p]) / g.spacing;
  }
  return d;
}

/// Backward difference (f[i] - f[i-1]) / h along `axis`; zero in the first slot of a Dirichlet axis.
template <typename Scalar>
BasicField<Scalar> backward_difference(const BasicField<Scalar>& f, int axis) {
  const auto& g = f.grid();
  BasicField<Scalar> d(g);
  for (Index p = 0; p < g.size(); ++p) {
    const Index q = g.neighbor(g.unflatten(p), axis, -1);
    if (q >= 0) d[p] = (f[p] - f[q]) / g.spacing;
  }
  return d;
}

/// Compact (5-point in 2-D, 7-point in 3-D) Laplacian. Neighbors beyond a Dirichlet end are
/// ghost values fixed at 1; periodic axes wrap.
template <typename Scalar>
BasicField<Scalar> laplacian(const BasicField<Scalar>& f) {
  using C = std::complex<Scalar>;
  const auto& g = f.grid();
  const Scalar inv_h2 = Scalar(1) / (g.spacing * g.spacing);
  BasicField<Scalar> out(g);
  for (Index p = 0; p < g.size(); ++p) {
    const auto idx = g.unflatten(p);
    C acc(0);
    for (int a = 0; a < g.dim; ++a) {
      const Index up = g.neighbor(idx, a, +1);
      const Index dn = g.neighbor(idx, a, -1);
      const C fu = up >= 0 ? f[up] : C(1);
      const C fd = dn >= 0 ? f[dn] : C(1);
      acc += fu - Scalar(2) * f[p] + fd;
    }
    out[p] = acc * inv_h2;
  }
  return out;
}

}  // namespace gpwaves
