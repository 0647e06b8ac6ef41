#pragma once

// Brute-force reference computations used by the tests. Everything here
// forms explicit J x J objects and is only meant for small J.

#include <random>

#include "face.hpp"

namespace oracle {

using face::Index;
using face::Matrix;
using face::Vector;

inline Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(gen);
  return m;
}

// Order-m difference matrix built by repeated differencing of the identity.
inline Matrix difference_matrix(Index c, int m) {
  Matrix d = Matrix::Identity(c, c);
  for (int k = 0; k < m; ++k) d = (d.bottomRows(d.rows() - 1) - d.topRows(d.rows() - 1)).eval();
  return d;
}

// S = B (B^T B + lambda D^T D)^{-1} B^T from the QR factor R of the stacked
// penalized least-squares matrix [B; sqrt(lambda) D]: S = G G^T, G = B R^{-1}.
// Avoids forming the normal equations, so large lambda stays accurate.
inline Matrix explicit_smoother(const face::BasisSpec& spec, double lambda) {
  const Matrix b = face::bspline_design(spec);
  const Matrix d = difference_matrix(b.cols(), spec.penalty_diff_order);
  Matrix m(b.rows() + d.rows(), b.cols());
  m << b, std::sqrt(lambda) * d;
  const Eigen::HouseholderQR<Matrix> qr(m);
  const Matrix r = qr.matrixQR().topRows(b.cols()).triangularView<Eigen::Upper>();
  const Matrix g = r.transpose().triangularView<Eigen::Lower>().solve(b.transpose()).transpose();
  return g * g.transpose();
}

// sum_i ||Y_i - S Y_i||^2 / (1 - alpha tr(S) / J)^2.
inline double pgcv_definition(const Matrix& y, const Matrix& s, double alpha) {
  const double J = double(y.rows());
  const double rss = (y - s * y).squaredNorm();
  const double d = 1.0 - alpha * s.trace() / J;
  return rss / (d * d);
}

// S (Y Y^T / I) S.
inline Matrix explicit_sandwich(const Matrix& y, const Matrix& s) {
  const Matrix k = y * y.transpose() / double(y.cols());
  return s * k * s;
}

// xi_ik = J^{-1} sum_j Y_i(t_j) psi_k(t_j), psi_k = sqrt(J) v_k.
inline Matrix riemann_scores(const Matrix& y, const Matrix& v) {
  const double J = double(y.rows());
  Matrix xi(y.cols(), v.cols());
  for (Index i = 0; i < y.cols(); ++i)
    for (Index k = 0; k < v.cols(); ++k) {
      double acc = 0;
      for (Index j = 0; j < y.rows(); ++j) acc += y(j, i) * std::sqrt(J) * v(j, k);
      xi(i, k) = acc / J;
    }
  return xi;
}

// Mixed-model BLUP Sigma Psi^T (Psi Sigma Psi^T + sigma2 / J I_J)^{-1} Y_i with
// Psi = sqrt(J) V and Sigma the function-scale eigenvalues.
inline Matrix explicit_blup(const Matrix& y, const Matrix& v, const Vector& eig_function,
                            double sigma2) {
  const double J = double(y.rows());
  const Matrix psi = std::sqrt(J) * v;
  Matrix cov = psi * eig_function.asDiagonal() * psi.transpose();
  cov.diagonal().array() += sigma2 / J;
  const Matrix gain = eig_function.asDiagonal() * psi.transpose() * cov.ldlt().solve(
                                                                        Matrix::Identity(y.rows(), y.rows()));
  return (gain * y).transpose();
}

// Positive part of a symmetric matrix.
inline Matrix positive_part(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector d = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline double rel_frob(const Matrix& a, const Matrix& b) {
  const double n = b.norm();
  return (a - b).norm() / (n > 0 ? n : 1.0);
}

}  // namespace oracle
