#pragma once

// Fast covariance estimation: the sandwich smoother S * K * S of the sample
// covariance K = Y Y^T / I, computed through the orthogonalized factor
// (A_S, s) so that no J x J object is ever formed.

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "face/pgcv.hpp"
#include "face/pspline.hpp"

namespace face {

struct FaceOptions {
  double alpha = 1.0;        // PGCV trace inflation, >= 1
  SearchSpec search{};
  bool center = true;        // subtract the mean curve before fitting
  double pve = 0.95;         // variance fraction used to pick n_selected
  std::optional<double> lambda;  // skip the PGCV search and use this value
};

// Matrix dimensions above which dense_covariance refuses to materialize K.
inline constexpr Index kExplicitThreshold = 2000;

// Wall-clock seconds per pipeline step. Steps 1-2 (basis factorization) are
// filled in by callers that time factorize_smoother.
struct StepTimings {
  std::array<double, 7> seconds{};
  double total() const {
    double t = 0;
    for (double s : seconds) t += s;
    return t;
  }
};

struct FaceFit {
  double lambda = 0;
  double alpha = 1;
  Matrix eigvecs;           // J x r, orthonormal columns (A_S * A)
  Vector eigvals_matrix;    // length r, descending, >= 0
  Vector eigvals_function;  // eigvals_matrix / J
  double sigma2 = 0;
  Matrix ytilde;            // c x I projected (centered) data
  Index n_selected = 0;     // smallest N reaching `pve` of the variance
  Matrix inner_vectors;     // c x r eigenvectors of the c x c inner matrix
  Vector inner_spectrum;    // all c eigenvalues of the inner matrix (clamped)
  Vector mean;              // subtracted mean curve (zeros when not centered)
  std::vector<std::string> warnings;
  StepTimings timings;

  Index grid_size() const { return eigvecs.rows(); }
  Index rank() const { return eigvecs.cols(); }
};

enum class ScoreMethod { numeric_integration, blup };

struct Scores {
  Matrix xi;  // I x N
  ScoreMethod method = ScoreMethod::numeric_integration;
};

// Ytilde = A_S^T Y.
inline Matrix project_data(const Matrix& y, const SmootherFactor& f) {
  if (y.rows() != f.grid_size()) {
    throw InputError("project_data: data has " + std::to_string(y.rows()) +
                     " grid points but the smoother expects " + std::to_string(f.grid_size()));
  }
  require_finite(y, "project_data");
  return f.basis_orth.transpose() * y;
}

// Subtracts the mean across subjects (columns) at each grid point.
inline Vector center_rows(Matrix& y) {
  Vector mean = y.rowwise().mean();
  y.colwise() -= mean;
  return mean;
}

// Smallest N with cumulative share of the (nonnegative) spectrum >= pve.
inline Index select_components(const Vector& descending, double pve) {
  const double total = descending.cwiseMax(0.0).sum();
  if (!(total > 0.0)) return 0;
  double acc = 0.0;
  for (Index k = 0; k < descending.size(); ++k) {
    acc += std::max(descending(k), 0.0);
    if (acc >= pve * total) return k + 1;
  }
  return descending.size();
}

namespace detail {

using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Steps 4-7 from the projected data. inner_scale multiplies Ytilde Ytilde^T
// (1/I for the sample covariance, 1 when a design matrix carries the scaling).
inline FaceFit fit_projected(Matrix ytilde, double y_frob2, const SmootherFactor& f,
                             const FaceOptions& opt, double inner_scale, Index num_curves,
                             StepTimings timings) {
  if (!(opt.alpha >= 1.0)) throw ContractError("face_fit: alpha must be >= 1");
  if (!(y_frob2 > 0.0)) {
    throw InputError("face_fit: data are identically zero; the covariance is undefined");
  }
  const Index J = f.grid_size();
  const Index c = f.num_basis();
  FaceFit fit;
  fit.alpha = opt.alpha;

  auto t0 = Clock::now();
  const PgcvTerms terms = PgcvTerms::from_projection(ytilde, y_frob2, f.penalty_spectrum, J);
  if (opt.lambda) {
    if (!(*opt.lambda >= 0.0) || !std::isfinite(*opt.lambda)) {
      throw ConfigError("face_fit: fixed lambda must be finite and >= 0");
    }
    fit.lambda = *opt.lambda;
  } else {
    fit.lambda = select_lambda(terms, opt.alpha, opt.search);
  }
  timings.seconds[3] = seconds_since(t0);

  t0 = Clock::now();
  const Vector shrink = f.shrinkage(fit.lambda);
  timings.seconds[4] = seconds_since(t0);

  t0 = Clock::now();
  const Matrix shrunk = shrink.asDiagonal() * ytilde;
  Matrix inner = inner_scale * (shrunk * shrunk.transpose());
  inner = (0.5 * (inner + inner.transpose())).eval();
  SymEig e = sym_eig(inner);
  if (e.values.minCoeff() < 0.0) {
    e.values = e.values.cwiseMax(0.0);
  }
  timings.seconds[5] = seconds_since(t0);

  t0 = Clock::now();
  const Index r = std::min(c, num_curves);
  fit.inner_spectrum = e.values;
  fit.inner_vectors = e.vectors.leftCols(r);
  fit.eigvals_matrix = e.values.head(r);
  fit.eigvals_function = fit.eigvals_matrix / double(J);
  fit.eigvecs = f.basis_orth * fit.inner_vectors;
  timings.seconds[6] = seconds_since(t0);

  const double raw_sigma2 =
      inner_scale * y_frob2 / double(J) - e.values.sum() / double(J);
  fit.sigma2 = std::max(raw_sigma2, 0.0);
  if (raw_sigma2 < 0.0) {
    fit.warnings.push_back("noise variance estimate was negative and has been clamped to 0");
  }
  fit.n_selected = select_components(fit.eigvals_matrix, opt.pve);
  if (fit.n_selected == 0) {
    throw InputError("face_fit: smoothed covariance is identically zero");
  }
  fit.ytilde = std::move(ytilde);
  fit.timings = timings;
  return fit;
}

}  // namespace detail

// FACE for a complete J x I data matrix (columns are curves).
inline FaceFit face_fit(const Matrix& y, const SmootherFactor& f, const FaceOptions& opt = {}) {
  if (y.cols() < 1) throw InputError("face_fit: no curves");
  StepTimings timings;
  auto t0 = detail::Clock::now();
  Matrix yc = y;
  Vector mean = Vector::Zero(y.rows());
  if (opt.center) mean = center_rows(yc);
  Matrix ytilde = project_data(yc, f);
  const double y_frob2 = yc.squaredNorm();
  timings.seconds[2] = detail::seconds_since(t0);
  FaceFit fit = detail::fit_projected(std::move(ytilde), y_frob2, f, opt,
                                      1.0 / double(y.cols()), y.cols(), timings);
  fit.mean = std::move(mean);
  return fit;
}

inline FaceFit face_fit(const Matrix& y, const SmootherFactor& f, double alpha,
                        const SearchSpec& search) {
  FaceOptions opt;
  opt.alpha = alpha;
  opt.search = search;
  return face_fit(y, f, opt);
}

// J x J smoothed covariance; refuses above explicit_threshold.
inline Matrix dense_covariance(const FaceFit& fit, Index explicit_threshold = kExplicitThreshold) {
  if (fit.grid_size() > explicit_threshold) {
    throw ConfigError("dense_covariance: J = " + std::to_string(fit.grid_size()) +
                      " exceeds the explicit threshold " + std::to_string(explicit_threshold) +
                      "; use the low-rank eigendecomposition instead");
  }
  return fit.eigvecs * fit.eigvals_matrix.asDiagonal() * fit.eigvecs.transpose();
}

// xi_i = J^{-1/2} A_N^T Ytilde_i.
inline Scores scores_numeric(const FaceFit& fit) {
  const Index n = fit.n_selected;
  if (n < 1) throw ContractError("scores_numeric: fit has no selected components");
  const double scale = 1.0 / std::sqrt(double(fit.grid_size()));
  Scores out;
  out.method = ScoreMethod::numeric_integration;
  out.xi = scale * (fit.inner_vectors.leftCols(n).transpose() * fit.ytilde).transpose();
  return out;
}

// xi_i = J^{-1/2} Sigma_N (Sigma_N + sigma2 / J)^{-1} A_N^T Ytilde_i.
inline Scores scores_blup(const FaceFit& fit) {
  const Index n = fit.n_selected;
  if (n < 1) throw ContractError("scores_blup: fit has no selected components");
  const double J = double(fit.grid_size());
  Vector gain(n);
  for (Index k = 0; k < n; ++k) {
    const double lam = fit.eigvals_matrix(k);
    const double noise = fit.sigma2 / J;
    // lam == 0 shrinks the coordinate to zero; infinite noise does the same.
    gain(k) = (lam > 0.0 && std::isfinite(noise)) ? lam / (lam + noise) : 0.0;
  }
  Scores out;
  out.method = ScoreMethod::blup;
  out.xi = ((gain / std::sqrt(J)).asDiagonal() *
            (fit.inner_vectors.leftCols(n).transpose() * fit.ytilde))
               .transpose();
  return out;
}

}  // namespace face
