#pragma once

// Equally spaced B-spline bases, difference penalties, and the
// lambda-independent orthogonalized smoother factorization.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "face/linalg.hpp"

namespace face {

struct BasisSpec {
  int num_interior_knots = 100;
  int spline_order = 4;  // degree + 1
  int penalty_diff_order = 2;
  Vector grid;           // sampling points in [0, 1], strictly increasing

  Index num_basis() const { return num_interior_knots + spline_order; }
  Index grid_size() const { return grid.size(); }

  // Grid t_j = j / J, j = 1..J.
  static BasisSpec equispaced(Index J, int knots = 100, int order = 4, int diff_order = 2) {
    BasisSpec spec;
    spec.num_interior_knots = knots;
    spec.spline_order = order;
    spec.penalty_diff_order = diff_order;
    spec.grid = Vector::LinSpaced(J, 1.0 / double(J), 1.0);
    return spec;
  }

  void validate() const {
    if (num_interior_knots < 0) throw ConfigError("basis: negative knot count");
    if (spline_order < 1) throw ConfigError("basis: spline order must be >= 1");
    if (penalty_diff_order < 0) throw ConfigError("basis: negative difference order");
    if (grid.size() < 1) throw ConfigError("basis: empty grid");
    if (num_basis() >= grid.size()) {
      throw ConfigError("basis: c = " + std::to_string(num_basis()) +
                        " basis functions must be fewer than J = " +
                        std::to_string(grid.size()) + " grid points");
    }
    require_finite(grid, "basis grid");
    for (Index j = 0; j < grid.size(); ++j) {
      if (grid(j) < 0.0 || grid(j) > 1.0) throw ConfigError("basis: grid point outside [0, 1]");
      if (j > 0 && !(grid(j) > grid(j - 1))) {
        throw ConfigError("basis: grid must be strictly increasing");
      }
    }
  }
};

// Interior knots k/(K+1), boundary knots 0 and 1 repeated `order` times.
inline Vector knot_vector(int interior, int order) {
  Vector t(interior + 2 * order);
  for (int i = 0; i < order; ++i) {
    t(i) = 0.0;
    t(interior + order + i) = 1.0;
  }
  for (int k = 1; k <= interior; ++k) t(order + k - 1) = double(k) / double(interior + 1);
  return t;
}

// Nonzero B-spline values at each grid point: row j of the design matrix is
// zero except for columns first[j] .. first[j] + order - 1, which hold values.row(j).
struct BasisRows {
  std::vector<Index> first;
  Matrix values;  // J x order
  Index num_basis = 0;
};

inline BasisRows bspline_rows(const BasisSpec& spec) {
  spec.validate();
  const int k = spec.spline_order;
  const Index n = spec.num_basis();
  const Vector t = knot_vector(spec.num_interior_knots, k);
  BasisRows rows;
  rows.num_basis = n;
  rows.first.resize(spec.grid.size());
  rows.values.resize(spec.grid.size(), k);
  std::vector<double> left(k), right(k), vals(k);
  for (Index j = 0; j < spec.grid.size(); ++j) {
    const double x = spec.grid(j);
    // span mu with t[mu] <= x < t[mu + 1], mu in [k-1, n-1]
    const double* pos = std::upper_bound(t.data() + k, t.data() + n, x);
    const Index mu = Index(pos - t.data()) - 1;
    vals[0] = 1.0;
    for (int d = 1; d < k; ++d) {
      left[d] = x - t(mu + 1 - d);
      right[d] = t(mu + d) - x;
      double saved = 0.0;
      for (int r = 0; r < d; ++r) {
        const double tmp = vals[r] / (right[r + 1] + left[d - r]);
        vals[r] = saved + right[r + 1] * tmp;
        saved = left[d - r] * tmp;
      }
      vals[d] = saved;
    }
    rows.first[j] = mu - k + 1;
    for (int r = 0; r < k; ++r) rows.values(j, r) = vals[r];
  }
  return rows;
}

// J x c design matrix {B_k(t_j)}.
inline Matrix bspline_design(const BasisSpec& spec) {
  const BasisRows rows = bspline_rows(spec);
  Matrix b = Matrix::Zero(spec.grid.size(), rows.num_basis);
  for (Index j = 0; j < b.rows(); ++j) {
    b.row(j).segment(rows.first[j], spec.spline_order) = rows.values.row(j);
  }
  return b;
}

// P = D^T D with D the order-m difference operator on c coefficients.
inline Matrix difference_penalty(Index c, int diff_order) {
  if (diff_order < 0 || diff_order >= c) {
    throw ConfigError("difference_penalty: order " + std::to_string(diff_order) +
                      " must be smaller than c = " + std::to_string(c));
  }
  Matrix d = Matrix::Identity(c, c);
  for (int m = 0; m < diff_order; ++m) {
    const Index r = d.rows();
    d = (d.bottomRows(r - 1) - d.topRows(r - 1)).eval();
  }
  return d.transpose() * d;
}

// S(lambda) = basis_orth * diag(1 / (1 + lambda * s)) * basis_orth^T
//           = B (B^T B + lambda P)^{-1} B^T.
struct SmootherFactor {
  Matrix basis_orth;       // J x c, orthonormal columns
  Vector penalty_spectrum; // s, length c, >= 0
  BasisSpec basis;

  Index grid_size() const { return basis_orth.rows(); }
  Index num_basis() const { return basis_orth.cols(); }

  Vector shrinkage(double lambda) const {
    return (1.0 + lambda * penalty_spectrum.array()).inverse().matrix();
  }
  double trace(double lambda) const { return shrinkage(lambda).sum(); }

  // Explicit J x J smoother; small J only (tests, naive baselines).
  Matrix dense_smoother(double lambda) const {
    return basis_orth * shrinkage(lambda).asDiagonal() * basis_orth.transpose();
  }
};

inline SmootherFactor factorize_smoother(const BasisSpec& spec) {
  const Matrix b = bspline_design(spec);
  const Matrix p = difference_penalty(b.cols(), spec.penalty_diff_order);
  const Matrix btb = b.transpose() * b;
  const Matrix w = inv_sqrt_sym(btb);
  Matrix sandwich = w * p * w;
  sandwich = (0.5 * (sandwich + sandwich.transpose())).eval();
  SymEig e = sym_eig(sandwich);
  SmootherFactor f;
  f.penalty_spectrum = e.values.cwiseMax(0.0);
  // rank(P) = c - m exactly; roundoff in the m null-space eigenvalues would
  // otherwise be amplified by large lambda.
  f.penalty_spectrum.tail(spec.penalty_diff_order).setZero();
  f.basis_orth = b * (w * e.vectors);
  f.basis = spec;
  return f;
}

}  // namespace face
