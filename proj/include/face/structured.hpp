#pragma once

// FACE for structured covariances Y H Y^T (multilevel, paired designs).

#include <string>
#include <utility>

#include "face/estimator.hpp"

namespace face {

struct StructuredDesign {
  Matrix H;  // n x n, symmetric
  std::string label;
};

// H1 with H1 H1^T = positive part of H (eigenvalues <= 1e-12 * max dropped).
inline Matrix psd_factor(const StructuredDesign& design) {
  const SymEig e = sym_eig(design.H);
  const double top = e.values.size() ? e.values(0) : 0.0;
  if (!(top > 0.0)) {
    throw InputError("psd_factor: design '" + design.label + "' has no positive eigenvalues");
  }
  Index r = 0;
  while (r < e.values.size() && e.values(r) > kRankTol * top) ++r;
  return e.vectors.leftCols(r) * e.values.head(r).cwiseSqrt().asDiagonal();
}

struct PairDesigns {
  StructuredDesign between;  // H_X
  StructuredDesign within;   // H_U
};

// Column order [Y_A | Y_C], I pairs:
//   H_X = (1/2I) [[0, I], [I, 0]],  H_U = (1/2I) [[I, -I], [-I, I]].
inline PairDesigns build_pair_designs(Index pairs) {
  if (pairs < 1) throw InputError("build_pair_designs: need at least one pair");
  const double w = 1.0 / (2.0 * double(pairs));
  const Matrix id = Matrix::Identity(pairs, pairs);
  PairDesigns d;
  d.between.label = "K_X";
  d.between.H = Matrix::Zero(2 * pairs, 2 * pairs);
  d.between.H.topRightCorner(pairs, pairs) = w * id;
  d.between.H.bottomLeftCorner(pairs, pairs) = w * id;
  d.within.label = "K_U";
  d.within.H.resize(2 * pairs, 2 * pairs);
  d.within.H << w * id, -w * id, -w * id, w * id;
  return d;
}

// FACE applied to Z = Y H1; the target is S Y H_+ Y^T S. Y must already have
// its mean functions removed; opt.center is ignored.
inline FaceFit face_fit_structured(const Matrix& y, const StructuredDesign& design,
                                   const SmootherFactor& f, const FaceOptions& opt = {}) {
  if (design.H.rows() != y.cols()) {
    throw InputError("face_fit_structured: data has " + std::to_string(y.cols()) +
                     " columns but the design is " + std::to_string(design.H.rows()) + " x " +
                     std::to_string(design.H.cols()));
  }
  require_finite(y, "face_fit_structured");
  StepTimings timings;
  auto t0 = detail::Clock::now();
  const Matrix z = y * psd_factor(design);
  Matrix ztilde = project_data(z, f);
  const double z_frob2 = z.squaredNorm();
  timings.seconds[2] = detail::seconds_since(t0);
  FaceFit fit =
      detail::fit_projected(std::move(ztilde), z_frob2, f, opt, 1.0, z.cols(), timings);
  fit.mean = Vector::Zero(y.rows());
  return fit;
}

inline FaceFit face_fit_structured(const Matrix& y, const StructuredDesign& design,
                                   const SmootherFactor& f, double alpha,
                                   const SearchSpec& search) {
  FaceOptions opt;
  opt.alpha = alpha;
  opt.search = search;
  return face_fit_structured(y, design, f, opt);
}

}  // namespace face
