#pragma once

// Pooled generalized cross-validation evaluated from projected data, and the
// deterministic search used to minimize it.

#include <cmath>
#include <limits>
#include <vector>

#include "face/linalg.hpp"

namespace face {

// Golden-section on log10(lambda), seeded by an equally spaced grid scan.
struct SearchSpec {
  double log10_min = -6.0;
  double log10_max = 8.0;
  int grid_points = 21;
  double log10_tol = 1e-6;
  int max_iter = 200;

  Vector grid() const { return Vector::LinSpaced(grid_points, log10_min, log10_max); }
};

// Sufficient statistics of the data for PGCV: every term is lambda-free.
struct PgcvTerms {
  Vector diag_c;        // diagonal of Ytilde Ytilde^T
  Vector s;             // penalty spectrum
  double y_frob2 = 0;   // ||Y||_F^2
  double ytilde_frob2 = 0;
  Index J = 0;

  static PgcvTerms from_projection(const Matrix& ytilde, double y_frob2, const Vector& s, Index J) {
    PgcvTerms t;
    t.diag_c = ytilde.rowwise().squaredNorm();
    t.s = s;
    t.y_frob2 = y_frob2;
    t.ytilde_frob2 = t.diag_c.sum();
    t.J = J;
    return t;
  }
};

// [sum_k C_kk (l s_k)^2 / (1 + l s_k)^2 - ||Yt||^2 + ||Y||^2] / [1 - alpha tr(S) / J]^2
inline double pgcv(double lambda, const PgcvTerms& t, double alpha) {
  if (!(alpha >= 1.0)) throw ContractError("pgcv: alpha must be >= 1");
  if (!(lambda >= 0.0)) throw ContractError("pgcv: lambda must be nonnegative");
  double fit = 0.0;
  double trace = 0.0;
  for (Index k = 0; k < t.s.size(); ++k) {
    const double ls = lambda * t.s(k);
    const double shrink = 1.0 / (1.0 + ls);
    const double damp = ls * shrink;
    fit += t.diag_c(k) * damp * damp;
    trace += shrink;
  }
  const double denom = 1.0 - alpha * trace / double(t.J);
  if (!(denom > 0.0)) {
    throw DegenerateSmootherError("pgcv: alpha * tr(S) >= J leaves no residual degrees of freedom");
  }
  const double outside = std::max(t.y_frob2 - t.ytilde_frob2, 0.0);
  return (fit + outside) / (denom * denom);
}

inline double pgcv(double lambda, const Matrix& ytilde, double y_frob2, const Vector& diag_c,
                   const Vector& s, Index J, double alpha) {
  PgcvTerms t;
  t.diag_c = diag_c;
  t.s = s;
  t.y_frob2 = y_frob2;
  t.ytilde_frob2 = ytilde.squaredNorm();
  t.J = J;
  return pgcv(lambda, t, alpha);
}

namespace detail {

// Minimizes f over log10(lambda) per SearchSpec. Values closer than tie_tol
// are indistinguishable; ties resolve toward the larger lambda.
template <typename F>
double minimize_log_lambda(F&& f, const SearchSpec& search, double tie_tol) {
  if (search.grid_points < 2 || !(search.log10_max > search.log10_min)) {
    throw ConfigError("lambda search: need >= 2 grid points over a nonempty range");
  }
  const double inf = std::numeric_limits<double>::infinity();
  auto eval = [&](double x) {
    try {
      const double v = f(std::pow(10.0, x));
      return std::isfinite(v) ? v : inf;
    } catch (const DegenerateSmootherError&) {
      return inf;
    }
  };
  const Vector grid = search.grid();
  std::vector<double> vals(grid.size());
  double lowest = inf;
  for (Index i = 0; i < grid.size(); ++i) {
    vals[i] = eval(grid(i));
    lowest = std::min(lowest, vals[i]);
  }
  if (!(lowest < inf)) {
    throw DegenerateSmootherError("lambda search: every candidate has a degenerate smoother");
  }
  Index best = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    if (vals[i] <= lowest + tie_tol) best = i;
  }
  // Refine by golden section on the bracket around the best grid point.
  double a = grid(std::max<Index>(best - 1, 0));
  double b = grid(std::min<Index>(best + 1, grid.size() - 1));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < search.max_iter && (b - a) > search.log10_tol; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - g * (b - a); f1 = eval(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + g * (b - a); f2 = eval(x2);
    }
  }
  double x_best = grid(best), f_best = vals[best];
  const double x_gold = 0.5 * (a + b);
  const double f_gold = eval(x_gold);
  if (f_gold < f_best - tie_tol || (f_gold <= f_best + tie_tol && x_gold > x_best)) {
    x_best = x_gold;
  }
  return std::pow(10.0, x_best);
}

}  // namespace detail

inline double select_lambda(const PgcvTerms& t, double alpha, const SearchSpec& search = {}) {
  // Roundoff in ||Y||^2 - ||Yt||^2 is a few ulps of ||Y||^2.
  const double tie_tol = 1e-12 * std::max(t.y_frob2, 1e-300);
  return detail::minimize_log_lambda([&](double l) { return pgcv(l, t, alpha); }, search, tie_tol);
}

inline double select_lambda(const Matrix& ytilde, double y_frob2, const Vector& s, Index J,
                            double alpha, const SearchSpec& search = {}) {
  return select_lambda(PgcvTerms::from_projection(ytilde, y_frob2, s, J), alpha, search);
}

}  // namespace face
