#pragma once

// Iterative FACE for curves with missing stretches: initialize the gaps with
// per-curve smooths, fit, predict the gaps from the principal scores, repeat.

#include <algorithm>
#include <vector>

#include "face/alt.hpp"
#include "face/estimator.hpp"

namespace face {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;  // true = observed

struct MaskedData {
  Matrix Y;   // J x I; values at unobserved entries are ignored
  Mask mask;  // J x I

  static MaskedData from_nan(const Matrix& y) {
    MaskedData d;
    d.Y = y;
    d.mask = y.array().isFinite();
    return d;
  }

  Index missing_count() const { return mask.size() - mask.count(); }

  // Every curve needs min_per_curve observations; every grid point needs one.
  void validate(Index min_per_curve) const {
    if (Y.rows() != mask.rows() || Y.cols() != mask.cols()) {
      throw InputError("masked data: mask and data dimensions differ");
    }
    for (Index i = 0; i < Y.cols(); ++i) {
      const Index n = mask.col(i).count();
      if (n < min_per_curve) {
        throw InputError("masked data: curve " + std::to_string(i) + " has " + std::to_string(n) +
                         " observed points; at least " + std::to_string(min_per_curve) +
                         " are required");
      }
      for (Index j = 0; j < Y.rows(); ++j) {
        if (mask(j, i) && !std::isfinite(Y(j, i))) {
          throw InputError("masked data: non-finite observed value in curve " + std::to_string(i));
        }
      }
    }
    for (Index j = 0; j < Y.rows(); ++j) {
      if (!mask.row(j).any()) {
        throw InputError("masked data: grid point " + std::to_string(j) +
                         " is unobserved in every curve");
      }
    }
  }
};

inline Index min_observed_per_curve(const BasisSpec& spec) {
  return std::max<Index>(10, 2 * spec.spline_order);
}

struct ImputeTrace {
  Index iterations = 0;
  std::vector<double> rel_changes;
  bool converged = false;
};

// Inside [first, last] observed index: smoothed-curve values. Outside: the
// curve's observed mean.
inline Matrix initialize_missing(const MaskedData& d, const BasisSpec& spec, double gcv_alpha = 1.0,
                                 const SearchSpec& search = {}) {
  d.validate(min_observed_per_curve(spec));
  Matrix out = d.Y;
  const Index J = d.Y.rows();
  for (Index i = 0; i < d.Y.cols(); ++i) {
    if (d.mask.col(i).all()) continue;
    std::vector<bool> obs(J);
    Index first = -1, last = -1;
    double sum = 0;
    Index n = 0;
    for (Index j = 0; j < J; ++j) {
      obs[j] = d.mask(j, i);
      if (obs[j]) {
        if (first < 0) first = j;
        last = j;
        sum += d.Y(j, i);
        ++n;
      }
    }
    const double mean = sum / double(n);
    bool interior_gap = false;
    for (Index j = first; j <= last; ++j) interior_gap = interior_gap || !obs[j];
    Vector smooth;
    if (interior_gap) smooth = smooth_observed(d.Y.col(i), obs, spec, gcv_alpha, search).values;
    for (Index j = 0; j < J; ++j) {
      if (obs[j]) continue;
      out(j, i) = (j > first && j < last) ? smooth(j) : mean;
    }
  }
  return out;
}

inline Matrix initialize_missing(const MaskedData& d, const UnivariateSmoother& sm) {
  return initialize_missing(d, sm.basis(), sm.gcv_alpha(), sm.search);
}

struct ImputeResult {
  std::vector<Vector> yhat_mis;  // per curve, centered scale, in grid order of the missing entries
  Scores scores;
  std::vector<std::string> warnings;
};

// Per curve, minimizes
//   (||y_mis - sqrt(J) V_mis xi||^2 + ||y_obs - sqrt(J) V_obs xi||^2) / (2 sigma2)
//   + xi^T Sigma_N^{-1} xi / 2
// over (y_mis, xi), where V holds the first N unit eigenvectors and y is
// centered by the fit's mean curve.
inline ImputeResult impute_step(const FaceFit& fit, const MaskedData& d) {
  const Index N = fit.n_selected;
  const Index J = fit.grid_size();
  if (N < 1) throw ContractError("impute_step: fit has no selected components");
  if (d.Y.rows() != J) throw InputError("impute_step: grid size mismatch");
  const double root_j = std::sqrt(double(J));
  const Matrix v = fit.eigvecs.leftCols(N);
  Vector prior_precision(N);
  for (Index k = 0; k < N; ++k) prior_precision(k) = fit.sigma2 / fit.eigvals_matrix(k);

  ImputeResult out;
  out.scores.method = ScoreMethod::blup;
  out.scores.xi.resize(d.Y.cols(), N);
  out.yhat_mis.resize(d.Y.cols());
  for (Index i = 0; i < d.Y.cols(); ++i) {
    Matrix gram = Matrix::Zero(N, N);
    Vector rhs = Vector::Zero(N);
    Index n_mis = 0;
    for (Index j = 0; j < J; ++j) {
      if (!d.mask(j, i)) {
        ++n_mis;
        continue;
      }
      const auto row = v.row(j);
      gram.noalias() += row.transpose() * row;
      rhs += row.transpose() * (d.Y(j, i) - fit.mean(j));
    }
    gram *= double(J);
    gram.diagonal() += prior_precision;
    rhs *= root_j;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-10 * std::max(gram.trace() / double(N), 1.0);
      gram.diagonal().array() += jitter;
      llt.compute(gram);
      out.warnings.push_back("impute_step: curve " + std::to_string(i) +
                             " normal matrix was singular; ridge jitter added");
    }
    const Vector xi = llt.solve(rhs);
    out.scores.xi.row(i) = xi.transpose();
    Vector mis(n_mis);
    Index m = 0;
    for (Index j = 0; j < J; ++j) {
      if (!d.mask(j, i)) mis(m++) = root_j * v.row(j).dot(xi);
    }
    out.yhat_mis[i] = std::move(mis);
  }
  return out;
}

struct IncompleteFit {
  FaceFit fit;
  ImputeTrace trace;
  Matrix completed;  // observed entries untouched, gaps imputed
};

inline IncompleteFit face_fit_incomplete(const MaskedData& d, const SmootherFactor& f,
                                         const FaceOptions& opt = {}, Index max_iter = 50,
                                         double tol = 1e-4) {
  if (d.Y.rows() != f.grid_size()) throw InputError("face_fit_incomplete: grid size mismatch");
  d.validate(min_observed_per_curve(f.basis));
  FaceOptions o = opt;
  o.center = true;
  IncompleteFit out;
  if (d.missing_count() == 0) {
    out.completed = d.Y;
    out.fit = face_fit(d.Y, f, o);
    out.trace.iterations = 1;
    out.trace.rel_changes.push_back(0.0);
    out.trace.converged = true;
    return out;
  }
  MaskedData cur{initialize_missing(d, f.basis, 1.0, opt.search), d.mask};
  for (Index it = 0; it < max_iter; ++it) {
    out.fit = face_fit(cur.Y, f, o);
    const ImputeResult imp = impute_step(out.fit, cur);
    double change = 0, scale = 0;
    for (Index i = 0; i < cur.Y.cols(); ++i) {
      Index m = 0;
      for (Index j = 0; j < cur.Y.rows(); ++j) {
        if (cur.mask(j, i)) continue;
        const double next = out.fit.mean(j) + imp.yhat_mis[i](m++);
        change = std::max(change, std::abs(next - cur.Y(j, i)));
        scale = std::max(scale, std::abs(cur.Y(j, i)));
        cur.Y(j, i) = next;
      }
    }
    const double rel = change / std::max(scale, 1e-300);
    out.trace.rel_changes.push_back(rel);
    out.trace.iterations = it + 1;
    if (rel < tol) {
      out.trace.converged = true;
      break;
    }
  }
  out.fit = face_fit(cur.Y, f, o);
  if (!out.trace.converged) {
    out.fit.warnings.push_back("incomplete-data iteration did not converge within " +
                               std::to_string(max_iter) + " iterations");
  }
  out.completed = std::move(cur.Y);
  return out;
}

}  // namespace face
