#pragma once

// Comparison estimators: SSVD (decompose, then smooth eigenvectors) and
// S-Smooth (smooth each curve, then decompose), plus the unsmoothed SVD.
// Both smoothing estimators share a richly knotted penalized spline whose
// smoothing parameter is chosen per curve by GCV.

#include <limits>
#include <memory>
#include <vector>

#include "face/estimator.hpp"

namespace face {

class UnivariateSmoother {
public:
  explicit UnivariateSmoother(BasisSpec basis, double gcv_alpha = 1.0)
      : gcv_alpha_(gcv_alpha),
        factor_(std::make_shared<const SmootherFactor>(factorize_smoother(basis))) {
    if (!(gcv_alpha >= 1.0)) throw ConfigError("univariate smoother: gcv_alpha must be >= 1");
  }

  // min(J/4, 200) interior knots, cubic, second differences.
  static UnivariateSmoother for_grid(const Vector& grid, double gcv_alpha = 1.0) {
    BasisSpec spec;
    spec.grid = grid;
    spec.num_interior_knots = int(std::max<Index>(1, std::min<Index>(grid.size() / 4, 200)));
    return UnivariateSmoother(std::move(spec), gcv_alpha);
  }

  const BasisSpec& basis() const { return factor_->basis; }
  const SmootherFactor& factor() const { return *factor_; }
  double gcv_alpha() const { return gcv_alpha_; }

  SearchSpec search{};

private:
  double gcv_alpha_;
  std::shared_ptr<const SmootherFactor> factor_;
};

struct SmoothedCurve {
  Vector values;
  double lambda = 0;
};

// y_hat = S(lambda*) y with lambda* minimizing the single-curve GCV.
inline SmoothedCurve smooth_curve_detail(const Vector& y, const UnivariateSmoother& sm) {
  const SmootherFactor& f = sm.factor();
  if (y.size() != f.grid_size()) throw InputError("smooth_curve: length does not match the grid");
  require_finite(y, "smooth_curve");
  const Matrix yt = f.basis_orth.transpose() * y;
  SmoothedCurve out;
  const double y2 = y.squaredNorm();
  if (y2 == 0.0) {
    out.values = Vector::Zero(y.size());
    return out;
  }
  out.lambda = select_lambda(PgcvTerms::from_projection(yt, y2, f.penalty_spectrum, y.size()),
                             sm.gcv_alpha(), sm.search);
  out.values = f.basis_orth * (f.shrinkage(out.lambda).asDiagonal() * yt);
  return out;
}

inline Vector smooth_curve(const Vector& y, const UnivariateSmoother& sm) {
  return smooth_curve_detail(y, sm).values;
}

inline Matrix smooth_columns(const Matrix& y, const UnivariateSmoother& sm) {
  Matrix out(y.rows(), y.cols());
  for (Index i = 0; i < y.cols(); ++i) out.col(i) = smooth_curve(y.col(i), sm);
  return out;
}

// Penalized spline fit using only the observed entries of y (weights 0/1),
// evaluated on the whole grid. GCV uses the observed count as sample size.
inline SmoothedCurve smooth_observed(const Vector& y, const std::vector<bool>& observed,
                                     const BasisSpec& spec, double gcv_alpha = 1.0,
                                     const SearchSpec& search = {}) {
  const BasisRows rows = bspline_rows(spec);
  const Index J = spec.grid.size();
  const Index c = rows.num_basis;
  const int k = spec.spline_order;
  if (y.size() != J || Index(observed.size()) != J) {
    throw InputError("smooth_observed: length does not match the grid");
  }
  Matrix gram = Matrix::Zero(c, c);
  Vector rhs = Vector::Zero(c);
  Index n_obs = 0;
  double y2 = 0;
  for (Index j = 0; j < J; ++j) {
    if (!observed[j]) continue;
    if (!std::isfinite(y(j))) throw InputError("smooth_observed: non-finite observed value");
    ++n_obs;
    y2 += y(j) * y(j);
    const Index f0 = rows.first[j];
    for (int a = 0; a < k; ++a) {
      rhs(f0 + a) += rows.values(j, a) * y(j);
      for (int b = 0; b < k; ++b) gram(f0 + a, f0 + b) += rows.values(j, a) * rows.values(j, b);
    }
  }
  if (n_obs < 2) throw InputError("smooth_observed: fewer than two observed points");
  const Matrix pen = difference_penalty(c, spec.penalty_diff_order);

  // With G + P = L L^T and L^{-1} G L^{-T} = Q diag(theta) Q^T (theta in
  // [0, 1]), G + lambda P = L Q diag(lambda + (1 - lambda) theta) Q^T L^T,
  // so every lambda costs O(c) after one c x c eigendecomposition.
  const Eigen::LLT<Matrix> base(gram + pen);
  if (base.info() != Eigen::Success) {
    throw SingularityError("smooth_observed: G + P is not positive definite", 0);
  }
  Matrix c_mat = base.matrixL().solve(base.matrixL().solve(gram).transpose());
  c_mat = (0.5 * (c_mat + c_mat.transpose())).eval();
  const SymEig e = sym_eig(c_mat);
  const Vector theta = e.values.cwiseMax(0.0).cwiseMin(1.0);
  const Vector z = e.vectors.transpose() * base.matrixL().solve(rhs);
  const Vector z2 = z.array().square();

  auto gcv = [&](double lambda) {
    const Vector w = (lambda + (1.0 - lambda) * theta.array()).matrix();
    if (!(w.minCoeff() > 0.0)) return std::numeric_limits<double>::infinity();
    const double trace = (theta.array() / w.array()).sum();
    const double rss = std::max(
        y2 - 2.0 * (z2.array() / w.array()).sum() +
            (theta.array() * z2.array() / w.array().square()).sum(),
        0.0);
    const double denom = 1.0 - gcv_alpha * trace / double(n_obs);
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return rss / (denom * denom);
  };
  SmoothedCurve out;
  out.lambda = detail::minimize_log_lambda(gcv, search, 1e-12 * std::max(y2, 1e-300));
  const Vector w = (out.lambda + (1.0 - out.lambda) * theta.array()).matrix();
  const Vector coef =
      base.matrixL().transpose().solve(e.vectors * (z.array() / w.array()).matrix());
  out.values.resize(J);
  for (Index j = 0; j < J; ++j) {
    out.values(j) = rows.values.row(j).dot(coef.segment(rows.first[j], k));
  }
  return out;
}

enum class AltMethod { raw, ssvd, s_smooth };

inline const char* to_string(AltMethod m) {
  switch (m) {
    case AltMethod::raw: return "raw";
    case AltMethod::ssvd: return "ssvd";
    case AltMethod::s_smooth: return "ssmooth";
  }
  return "?";
}

struct AltFit {
  AltMethod method = AltMethod::raw;
  Matrix eigvecs;           // J x r
  Vector eigvals_matrix;    // descending, >= 0
  Vector eigvals_function;  // eigvals_matrix / J
};

namespace detail {
inline AltFit alt_from_svd(AltMethod m, const ThinSvd& svd, Index keep, Index num_curves) {
  AltFit fit;
  fit.method = m;
  fit.eigvecs = svd.left.leftCols(keep);
  fit.eigvals_matrix = svd.singular_values.head(keep).array().square() / double(num_curves);
  fit.eigvals_function = fit.eigvals_matrix / double(svd.left.rows());
  return fit;
}
}  // namespace detail

// Unsmoothed eigendecomposition of the sample covariance via the SVD of Y.
inline AltFit raw_svd_fit(const Matrix& y) {
  const ThinSvd svd = thin_svd(y);
  return detail::alt_from_svd(AltMethod::raw, svd, svd.singular_values.size(), y.cols());
}

// keep = 0 selects the number of components by the 95% variance rule.
inline AltFit ssvd_fit(const Matrix& y, Index keep, const UnivariateSmoother& sm, double pve = 0.95) {
  if (y.rows() != sm.factor().grid_size()) throw InputError("ssvd_fit: grid size mismatch");
  const ThinSvd svd = thin_svd(y);
  const Index limit = svd.singular_values.size();
  if (keep > limit) {
    throw InputError("ssvd_fit: keep = " + std::to_string(keep) + " exceeds min(I, J) = " +
                     std::to_string(limit));
  }
  if (keep <= 0) {
    keep = select_components(svd.singular_values.array().square().matrix(), pve);
    if (keep == 0) throw InputError("ssvd_fit: data are identically zero");
  }
  AltFit fit = detail::alt_from_svd(AltMethod::ssvd, svd, keep, y.cols());
  for (Index k = 0; k < keep; ++k) {
    Vector v = smooth_curve(fit.eigvecs.col(k), sm);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    fit.eigvecs.col(k) = v;
  }
  return fit;
}

inline AltFit s_smooth_fit(const Matrix& y, const UnivariateSmoother& sm) {
  if (y.rows() != sm.factor().grid_size()) throw InputError("s_smooth_fit: grid size mismatch");
  const ThinSvd svd = thin_svd(smooth_columns(y, sm));
  AltFit fit = detail::alt_from_svd(AltMethod::s_smooth, svd, svd.singular_values.size(), y.cols());
  fit.method = AltMethod::s_smooth;
  return fit;
}

}  // namespace face
