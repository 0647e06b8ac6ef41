#pragma once

// Dense linear-algebra contracts used throughout the library.
//
// Storage is Eigen's default column-major layout. Eigen's self-adjoint
// tridiagonal QR and divide-and-conquer SVD do the numerical work; this layer
// adds input validation, descending ordering, and the scale-invariant
// singularity cutoff used by inv_sqrt_sym.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "face/errors.hpp"

namespace face {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigenpairs of a symmetric matrix; values sorted descending.
struct SymEig {
  Matrix vectors;
  Vector values;
};

struct ThinSvd {
  Matrix left;
  Vector singular_values;  // nonnegative, descending
  Matrix right;
};

// Relative cutoff below which an eigenvalue counts as zero in inv_sqrt_sym.
inline constexpr double kRankTol = 1e-12;
inline constexpr double kSymmetryTol = 1e-10;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + ": non-finite entries");
  }
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double rel_tol = kSymmetryTol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(max_abs(m), 1e-300);
  return max_abs(m - m.transpose()) <= rel_tol * scale;
}

inline void require_symmetric(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw ContractError(std::string(what) + ": matrix is not square");
  }
  if (!is_symmetric(m)) {
    throw ContractError(std::string(what) + ": matrix is not symmetric");
  }
}

// Eigendecomposition of a symmetric matrix with eigenvalues sorted descending.
inline SymEig sym_eig(const Matrix& m) {
  require_finite(m, "sym_eig");
  require_symmetric(m, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error("sym_eig: eigensolver failed to converge");
  }
  // Eigen returns ascending order.
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

// Thin SVD: left is rows x k, right is cols x k with k = min(rows, cols).
inline ThinSvd thin_svd(const Matrix& m) {
  require_finite(m, "thin_svd");
  if (m.rows() < m.cols()) {
    ThinSvd t = thin_svd(m.transpose());
    std::swap(t.left, t.right);
    return t;
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// Symmetric W with W * M * W = I for symmetric positive-definite M.
inline Matrix inv_sqrt_sym(const Matrix& m) {
  const SymEig e = sym_eig(m);
  const double top = e.values.size() ? e.values(0) : 0.0;
  const double cutoff = kRankTol * std::max(top, 0.0);
  for (Index k = 0; k < e.values.size(); ++k) {
    if (!(e.values(k) > cutoff)) {
      throw SingularityError("inv_sqrt_sym: eigenvalue " + std::to_string(k) +
                                 " is at or below the rank tolerance",
                             static_cast<std::size_t>(k));
    }
  }
  const Vector inv_root = e.values.cwiseSqrt().cwiseInverse();
  return e.vectors * inv_root.asDiagonal() * e.vectors.transpose();
}

// Number of entries of a descending spectrum above rel_tol * (largest).
inline Index numerical_rank(const Vector& descending_values, double rel_tol) {
  if (descending_values.size() == 0) return 0;
  const double top = descending_values(0);
  if (!(top > 0.0)) return 0;
  Index r = 0;
  for (Index k = 0; k < descending_values.size(); ++k) {
    if (descending_values(k) > rel_tol * top) ++r;
  }
  return r;
}

}  // namespace face
