#pragma once

// Generative covariance models, sampling, block missingness and the
// accuracy metrics used by the simulation campaigns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "face/errors.hpp"
#include "face/linalg.hpp"
#include "face/matern.hpp"
#include "face/rng.hpp"

namespace face {

enum class CovKind { finite_basis, brownian_motion, brownian_bridge, matern };

inline const char* to_string(CovKind k) {
  switch (k) {
    case CovKind::finite_basis: return "finite_basis";
    case CovKind::brownian_motion: return "brownian_motion";
    case CovKind::brownian_bridge: return "brownian_bridge";
    case CovKind::matern: return "matern";
  }
  return "?";
}

struct CovModel {
  CovKind kind = CovKind::finite_basis;
  int case_id = 1;        // 1..5; selects the finite-basis family for cases 1-2
  Vector eigvals;         // function scale, descending (empty for matern)
  int truncation = 500;   // terms kept for the infinite expansions
  double matern_phi = 0.07;
  double matern_nu = 1.0;
  MaternScaling matern_scaling = MaternScaling::range;

  // Cases: 1 Fourier basis, 2 Legendre basis, 3 Brownian motion,
  // 4 Brownian bridge, 5 Matérn(phi = 0.07, nu = 1).
  static CovModel from_case(int id, int truncation = 500) {
    if (truncation < 1) throw ConfigError("cov model: truncation must be >= 1");
    CovModel m;
    m.case_id = id;
    m.truncation = truncation;
    switch (id) {
      case 1:
      case 2:
        m.kind = CovKind::finite_basis;
        m.eigvals.resize(3);
        m.eigvals << 1.0, 0.5, 0.25;
        break;
      case 3:
        m.kind = CovKind::brownian_motion;
        m.eigvals.resize(truncation);
        for (int l = 1; l <= truncation; ++l) {
          const double w = (double(l) - 0.5) * M_PI;
          m.eigvals(l - 1) = 1.0 / (w * w);
        }
        break;
      case 4:
        m.kind = CovKind::brownian_bridge;
        m.eigvals.resize(truncation);
        for (int l = 1; l <= truncation; ++l) {
          const double w = double(l) * M_PI;
          m.eigvals(l - 1) = 1.0 / (w * w);
        }
        break;
      case 5:
        m.kind = CovKind::matern;
        break;
      default:
        throw ConfigError("cov model: unknown case " + std::to_string(id) +
                          "; valid cases are 1, 2, 3, 4, 5");
    }
    return m;
  }

  bool has_closed_form() const { return kind != CovKind::matern; }

  // psi_k(t), k zero-based. Not available for the Matérn model, whose
  // eigenfunctions come from the gridded kernel (see build_truth).
  double eigfunc(Index k, double t) const {
    const double r2 = std::sqrt(2.0);
    switch (kind) {
      case CovKind::finite_basis:
        if (case_id == 1) {
          if (k == 0) return r2 * std::sin(2 * M_PI * t);
          if (k == 1) return r2 * std::cos(4 * M_PI * t);
          if (k == 2) return r2 * std::sin(4 * M_PI * t);
        } else {
          if (k == 0) return std::sqrt(3.0) * (2 * t - 1);
          if (k == 1) return std::sqrt(5.0) * (6 * t * t - 6 * t + 1);
          if (k == 2) return std::sqrt(7.0) * (20 * t * t * t - 30 * t * t + 12 * t - 1);
        }
        break;
      case CovKind::brownian_motion:
        if (k < truncation) return r2 * std::sin((double(k) + 0.5) * M_PI * t);
        break;
      case CovKind::brownian_bridge:
        if (k < truncation) return r2 * std::sin(double(k + 1) * M_PI * t);
        break;
      case CovKind::matern:
        throw UnsupportedError("cov model: Matérn eigenfunctions have no closed form");
    }
    throw InputError("cov model: eigenfunction index " + std::to_string(k) + " out of range");
  }

  // sigma^2 = integral of K(t, t) over [0, 1] (signal-to-noise ratio 1).
  double noise_variance() const {
    switch (kind) {
      case CovKind::finite_basis: return eigvals.sum();
      case CovKind::brownian_motion: return 0.5;
      case CovKind::brownian_bridge: return 1.0 / 6.0;
      case CovKind::matern: return 1.0;
    }
    return 0.0;
  }

  // K(s, t): the truncated expansion for cases 1-4, the kernel for Matérn.
  double kernel(double s, double t) const {
    if (kind == CovKind::matern) {
      return matern_cov(std::abs(s - t), matern_phi, matern_nu, matern_scaling);
    }
    double acc = 0;
    for (Index k = 0; k < eigvals.size(); ++k) acc += eigvals(k) * eigfunc(k, s) * eigfunc(k, t);
    return acc;
  }
};

// Grid t_j = j / J, j = 1..J.
inline Vector sim_grid(Index J) {
  if (J < 1) throw ConfigError("sim grid: J must be >= 1");
  return Vector::LinSpaced(J, 1.0 / double(J), 1.0);
}

inline constexpr Index kTrueCovLimit = 2000;

inline Matrix true_cov_matrix(const CovModel& m, const Vector& grid) {
  const Index J = grid.size();
  if (J > kTrueCovLimit) {
    throw ConfigError("true_cov_matrix: J = " + std::to_string(J) + " exceeds " +
                      std::to_string(kTrueCovLimit) + "; use build_truth instead");
  }
  Matrix k(J, J);
  if (m.kind == CovKind::matern) {
    for (Index a = 0; a < J; ++a)
      for (Index b = 0; b <= a; ++b) k(a, b) = k(b, a) = m.kernel(grid(a), grid(b));
    return k;
  }
  Matrix phi(J, m.eigvals.size());
  for (Index l = 0; l < phi.cols(); ++l)
    for (Index j = 0; j < J; ++j) phi(j, l) = m.eigfunc(l, grid(j));
  return phi * m.eigvals.asDiagonal() * phi.transpose();
}

// The true eigensystem evaluated on a grid:
// K(t_a, t_b) = sum_l eigvals_l eigfuncs(a, l) eigfuncs(b, l).
struct TruthSystem {
  CovModel model;
  Vector grid;
  Matrix eigfuncs;  // J x L, function values
  Vector eigvals;   // L, function scale
  double noise_var = 0;
  double frob2 = 0;  // sum_{a,b} K(t_a, t_b)^2
};

// Matérn: the J x J gridded kernel is eigendecomposed once; its positive
// spectrum gives eigfuncs = sqrt(J) * vectors and eigvals = values / J.
inline TruthSystem build_truth(const CovModel& m, Index J) {
  TruthSystem t;
  t.model = m;
  t.grid = sim_grid(J);
  t.noise_var = m.noise_variance();
  if (m.kind == CovKind::matern) {
    Matrix k(J, J);
    for (Index a = 0; a < J; ++a)
      for (Index b = 0; b <= a; ++b) k(a, b) = k(b, a) = m.kernel(t.grid(a), t.grid(b));
    const SymEig e = sym_eig(k);
    Index L = 0;
    while (L < e.values.size() && e.values(L) > kRankTol * e.values(0)) ++L;
    t.eigfuncs = std::sqrt(double(J)) * e.vectors.leftCols(L);
    t.eigvals = e.values.head(L) / double(J);
    t.frob2 = e.values.head(L).squaredNorm();
    return t;
  }
  const Index L = m.eigvals.size();
  t.eigvals = m.eigvals;
  t.eigfuncs.resize(J, L);
  for (Index l = 0; l < L; ++l)
    for (Index j = 0; j < J; ++j) t.eigfuncs(j, l) = m.eigfunc(l, t.grid(j));
  // ||Phi Lambda Phi^T||_F^2 = tr(Lambda G Lambda G), G = Phi^T Phi.
  const Matrix g = t.eigfuncs.transpose() * t.eigfuncs;
  const Matrix lg = t.eigvals.asDiagonal() * g;
  t.frob2 = (lg.array() * lg.transpose().array()).sum();
  return t;
}

// J x I curves plus noise; per curve, L scores then J noise draws.
inline Matrix generate_curves(const TruthSystem& t, Index I, Rng& rng) {
  const Index J = t.grid.size();
  const Index L = t.eigvals.size();
  const Vector root = t.eigvals.cwiseSqrt();
  const double sd = std::sqrt(t.noise_var);
  Matrix z(L, I);
  Matrix noise(J, I);
  for (Index i = 0; i < I; ++i) {
    for (Index l = 0; l < L; ++l) z(l, i) = root(l) * rng.normal();
    for (Index j = 0; j < J; ++j) noise(j, i) = sd * rng.normal();
  }
  Matrix y = t.eigfuncs * z;
  y += noise;
  return y;
}

inline Matrix generate_sample(const TruthSystem& t, Index I, std::uint64_t seed) {
  Rng rng(seed);
  return generate_curves(t, I, rng);
}

inline Matrix generate_sample(const CovModel& m, Index J, Index I, std::uint64_t seed) {
  return generate_sample(build_truth(m, J), I, seed);
}

// ---- Block missingness ----------------------------------------------------

struct McarBlocks {
  Index block_length = 0;
  std::vector<std::vector<Index>> starts;  // per subject, sorted
};

inline Index mcar_block_length(Index J) { return Index(std::floor(0.065 * double(J))); }

// Per subject: b ~ Uniform{1, 2, 3} blocks of length floor(0.065 J), placed
// uniformly and redrawn jointly until no two overlap.
inline McarBlocks mcar_blocks(Index J, Index I, std::uint64_t seed, int max_retries = 1000) {
  McarBlocks out;
  out.block_length = mcar_block_length(J);
  const Index len = out.block_length;
  if (len < 1 || 3 * len >= J) {
    throw ConfigError("mcar_mask: J = " + std::to_string(J) +
                      " cannot hold three disjoint blocks of length " + std::to_string(len));
  }
  Rng rng(seed);
  const std::uint64_t positions = std::uint64_t(J - len + 1);
  out.starts.resize(I);
  for (Index i = 0; i < I; ++i) {
    const int b = 1 + int(rng.below(3));
    std::vector<Index> s(b);
    bool placed = false;
    for (int attempt = 0; attempt < max_retries && !placed; ++attempt) {
      for (int q = 0; q < b; ++q) s[q] = Index(rng.below(positions));
      std::sort(s.begin(), s.end());
      placed = true;
      for (int q = 1; q < b; ++q) placed = placed && (s[q] >= s[q - 1] + len);
    }
    if (!placed) {
      throw ConfigError("mcar_mask: could not place non-overlapping blocks for subject " +
                        std::to_string(i));
    }
    out.starts[i] = std::move(s);
  }
  return out;
}

// J x I, true = observed.
inline Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask_from_blocks(const McarBlocks& b,
                                                                         Index J) {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(J, Index(b.starts.size()), true);
  for (Index i = 0; i < Index(b.starts.size()); ++i)
    for (Index s : b.starts[i]) mask.col(i).segment(s, b.block_length).setConstant(false);
  return mask;
}

inline Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mcar_mask(Index J, Index I,
                                                                  std::uint64_t seed) {
  return mask_from_blocks(mcar_blocks(J, I, seed), J);
}

// ---- Metrics ---------------------------------------------------------------

// J^{-2} sum_{a,b} (Khat - K)^2 with Khat(t_a, t_b) = J sum_k lhat_k v_k(a) v_k(b),
// evaluated from the low-rank factors only.
inline double mise_covariance(const Matrix& est_eigvecs, const Vector& est_eigvals_function,
                              const TruthSystem& t) {
  const Index J = t.grid.size();
  if (est_eigvecs.rows() != J || est_eigvecs.cols() != est_eigvals_function.size()) {
    throw InputError("mise_covariance: inconsistent estimate dimensions");
  }
  const Vector d = double(J) * est_eigvals_function;
  const Matrix vtv = est_eigvecs.transpose() * est_eigvecs;
  double est2 = 0;
  for (Index k = 0; k < d.size(); ++k)
    for (Index l = 0; l < d.size(); ++l) est2 += d(k) * d(l) * vtv(k, l) * vtv(k, l);
  const Matrix w = t.eigfuncs.transpose() * est_eigvecs;  // L x r
  double cross = 0;
  for (Index k = 0; k < d.size(); ++k) {
    cross += d(k) * (t.eigvals.array() * w.col(k).array().square()).sum();
  }
  const double total = est2 - 2.0 * cross + t.frob2;
  return std::max(total, 0.0) / (double(J) * double(J));
}

// J^{-1} sum_j (sqrt(J) v(t_j) s - psi_k(t_j))^2 minimized over s = +-1.
inline double mise_eigenfunction(const Vector& est_vec, const TruthSystem& t, Index k) {
  const Index J = t.grid.size();
  if (est_vec.size() != J) throw InputError("mise_eigenfunction: length mismatch");
  if (k < 0 || k >= t.eigfuncs.cols()) {
    throw InputError("mise_eigenfunction: component " + std::to_string(k) + " out of range");
  }
  const Vector scaled = std::sqrt(double(J)) * est_vec;
  const auto psi = t.eigfuncs.col(k);
  const double plus = (scaled - psi).squaredNorm();
  const double minus = (scaled + psi).squaredNorm();
  return std::min(plus, minus) / double(J);
}

// (lhat / l - 1)^2 for one replicate; campaigns average it.
inline double eigenvalue_sqerr(double est, double truth) {
  if (!(truth > 0.0)) throw InputError("eigenvalue_sqerr: true eigenvalue must be positive");
  const double r = est / truth - 1.0;
  return r * r;
}

inline double amse_eigenvalue(const std::vector<double>& est, double truth) {
  if (est.empty()) throw InputError("amse_eigenvalue: no replicates");
  double acc = 0;
  for (double e : est) acc += eigenvalue_sqerr(e, truth);
  return acc / double(est.size());
}

}  // namespace face
