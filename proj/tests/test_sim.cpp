#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"

using namespace face;

TEST(BesselK1, ReferenceValues) {
  // Reference values computed with 30-digit arithmetic.
  const std::vector<std::pair<double, double>> ref = {
      {1e-3, 999.99623815608561},   {0.1, 9.853844780870606},
      {0.5, 1.6564411200033009},    {1.0, 0.60190723019723458},
      {1.9999, 0.13988426583169103}, {2.0, 0.13986588181652243},
      {2.0001, 0.13984750046881139}, {5.0, 0.0040446134454521646},
      {10.0, 1.8648773453825585e-5}, {50.0, 3.4441022267175555e-23},
      {300.0, 3.7298958583323724e-132}};
  for (auto [x, v] : ref) EXPECT_NEAR(bessel_k1(x) / v, 1.0, 1e-8) << "x = " << x;
  EXPECT_EQ(bessel_k1(800.0), 0.0);
  EXPECT_TRUE(std::isinf(bessel_k1(0.0)));
  EXPECT_THROW(bessel_k1(-1.0), InputError);
}

TEST(Matern, ShapeAndErrors) {
  EXPECT_EQ(matern_cov(0.0, 0.07, 1.0), 1.0);
  double prev = 1.0;
  for (double d = 0.001; d < 1.0; d += 0.01) {
    const double c = matern_cov(d, 0.07, 1.0);
    EXPECT_LT(c, prev);
    EXPECT_GT(c, 0.0);
    prev = c;
  }
  EXPECT_NEAR(matern_cov(1e-9, 0.07, 1.0), 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(matern_cov(0.1, 0.07 / std::sqrt(2.0), 1.0, MaternScaling::range),
                   matern_cov(0.1, 0.07, 1.0, MaternScaling::sqrt_2nu));
  EXPECT_THROW(matern_cov(0.1, 0.07, 1.5), UnsupportedError);
  EXPECT_THROW(matern_cov(0.1, 0.0, 1.0), InputError);
  EXPECT_THROW(matern_cov(-0.1, 0.07, 1.0), InputError);
}

TEST(CovModel, NoiseVariances) {
  EXPECT_DOUBLE_EQ(CovModel::from_case(1).noise_variance(), 1.75);
  EXPECT_DOUBLE_EQ(CovModel::from_case(2).noise_variance(), 1.75);
  EXPECT_DOUBLE_EQ(CovModel::from_case(3).noise_variance(), 0.5);
  EXPECT_DOUBLE_EQ(CovModel::from_case(4).noise_variance(), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(CovModel::from_case(5).noise_variance(), 1.0);
  EXPECT_THROW(CovModel::from_case(6), ConfigError);
  EXPECT_THROW(CovModel::from_case(0), ConfigError);
}

TEST(CovModel, FiniteBasisKernel) {
  // At t = 1/4: 2 sin^2(pi/2) + 0.5 * 2 cos^2(pi) + 0.25 * 2 sin^2(pi) = 3.
  EXPECT_NEAR(CovModel::from_case(1).kernel(0.25, 0.25), 3.0, 1e-12);
  // Legendre at t = 1: 3 + 0.5 * 5 + 0.25 * 7.
  EXPECT_NEAR(CovModel::from_case(2).kernel(1.0, 1.0), 7.25, 1e-12);
  // Eigenfunctions are orthonormal in L2: midpoint rule on a fine grid.
  for (int c : {1, 2}) {
    const CovModel m = CovModel::from_case(c);
    const int n = 20000;
    Matrix g = Matrix::Zero(3, 3);
    for (int j = 0; j < n; ++j) {
      const double t = (j + 0.5) / n;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) g(a, b) += m.eigfunc(a, t) * m.eigfunc(b, t) / n;
    }
    EXPECT_LT((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6) << "case " << c;
  }
  EXPECT_THROW(CovModel::from_case(1).eigfunc(3, 0.5), InputError);
  EXPECT_THROW(CovModel::from_case(5).eigfunc(0, 0.5), UnsupportedError);
}

TEST(CovModel, BrownianKernels) {
  const CovModel bm = CovModel::from_case(3), bb = CovModel::from_case(4);
  for (double s : {0.1, 0.37, 0.8})
    for (double t : {0.05, 0.5, 0.93}) {
      EXPECT_NEAR(bm.kernel(s, t), std::min(s, t), 2e-3);
      EXPECT_NEAR(bb.kernel(s, t), std::min(s, t) - s * t, 2e-3);
    }
  // Squared Hilbert-Schmidt norm of the bridge kernel is 1/90.
  EXPECT_NEAR(bb.eigvals.squaredNorm(), 1.0 / 90.0, 1e-10);
  // Brownian motion: sum of eigenvalues equals integral of t over [0, 1].
  EXPECT_NEAR(bm.eigvals.sum(), 0.5, 1e-3);
}

TEST(TrueCov, GridAndLimit) {
  const Vector g = sim_grid(4);
  EXPECT_DOUBLE_EQ(g(0), 0.25);
  EXPECT_DOUBLE_EQ(g(3), 1.0);
  const Matrix k = true_cov_matrix(CovModel::from_case(1), sim_grid(8));
  EXPECT_NEAR(k(1, 1), 3.0, 1e-12);  // t = 0.25
  EXPECT_THROW(true_cov_matrix(CovModel::from_case(1), sim_grid(kTrueCovLimit + 1)), ConfigError);
}

TEST(Truth, FrobeniusNorm) {
  for (int c : {1, 3, 5}) {
    const TruthSystem t = build_truth(CovModel::from_case(c, 200), 60);
    const Matrix k = true_cov_matrix(t.model, t.grid);
    EXPECT_NEAR(t.frob2, k.squaredNorm(), 1e-8 * k.squaredNorm()) << "case " << c;
  }
}

TEST(Generate, Reproducible) {
  const TruthSystem t = build_truth(CovModel::from_case(3, 50), 40);
  EXPECT_EQ(generate_sample(t, 5, 9), generate_sample(t, 5, 9));
  EXPECT_NE(generate_sample(t, 5, 9), generate_sample(t, 5, 10));
}

TEST(Generate, SampleCovarianceMatchesTruth) {
  const Index J = 20, I = 50000;
  const TruthSystem t = build_truth(CovModel::from_case(1), J);
  const Matrix y = generate_sample(t, I, 77);
  const Matrix s = y * y.transpose() / double(I);
  Matrix k = true_cov_matrix(t.model, t.grid);
  k.diagonal().array() += t.noise_var;
  EXPECT_LT(oracle::rel_frob(s, k), 0.02);
}

TEST(Mask, BlockStructure) {
  const Index J = 300, I = 3000;
  const McarBlocks b = mcar_blocks(J, I, 5);
  EXPECT_EQ(b.block_length, 19);
  std::map<std::size_t, int> counts;
  for (const auto& s : b.starts) {
    ++counts[s.size()];
    for (std::size_t q = 1; q < s.size(); ++q) EXPECT_GE(s[q], s[q - 1] + b.block_length);
    for (Index st : s) EXPECT_LE(st + b.block_length, J);
  }
  // Chi-square goodness of fit against Uniform{1, 2, 3}: 2 dof, 0.999 quantile 13.8.
  double chi2 = 0;
  for (int k = 1; k <= 3; ++k) {
    const double e = I / 3.0;
    chi2 += std::pow(counts[k] - e, 2) / e;
  }
  EXPECT_LT(chi2, 13.8);
  const auto mask = mask_from_blocks(b, J);
  const double missing = 1.0 - double(mask.count()) / double(J * I);
  EXPECT_NEAR(missing, 2.0 * 19.0 / 300.0, 0.01);  // E[b] = 2
  for (Index i = 0; i < I; ++i)
    EXPECT_EQ(J - mask.col(i).count(), Index(b.starts[i].size()) * b.block_length);
}

TEST(Mask, ReproducibleAndRejectsSmallGrids) {
  EXPECT_TRUE((mcar_mask(200, 10, 3) == mcar_mask(200, 10, 3)).all());
  EXPECT_THROW(mcar_blocks(10, 2, 1), ConfigError);
}

TEST(Metrics, EigenfunctionSignInvariant) {
  const TruthSystem t = build_truth(CovModel::from_case(1), 100);
  const Vector v = t.eigfuncs.col(0) / std::sqrt(100.0);
  EXPECT_NEAR(mise_eigenfunction(v, t, 0), 0.0, 1e-20);
  EXPECT_EQ(mise_eigenfunction(v, t, 0), mise_eigenfunction(-v, t, 0));
  const Vector w = v + 0.01 * oracle::random_matrix(100, 1, 1).col(0);
  EXPECT_EQ(mise_eigenfunction(w, t, 0), mise_eigenfunction(-w, t, 0));
  EXPECT_THROW(mise_eigenfunction(v, t, 3), InputError);
}

TEST(Metrics, CovarianceMatchesDense) {
  for (int c : {1, 4}) {
    const TruthSystem t = build_truth(CovModel::from_case(c, 100), 50);
    const Matrix q = oracle::random_matrix(50, 4, 2).householderQr().householderQ() *
                     Matrix::Identity(50, 4);
    Vector lam(4);
    lam << 0.9, 0.4, 0.1, 0.02;
    const Matrix est = 50.0 * q * lam.asDiagonal() * q.transpose();
    const double dense = (est - true_cov_matrix(t.model, t.grid)).squaredNorm() / (50.0 * 50.0);
    EXPECT_NEAR(mise_covariance(q, lam, t), dense, 1e-10 * dense);
  }
  const TruthSystem t = build_truth(CovModel::from_case(1), 64);
  const Matrix v = t.eigfuncs / std::sqrt(64.0);
  EXPECT_NEAR(mise_covariance(v, t.eigvals, t), 0.0, 1e-12);
}

TEST(Metrics, EigenvalueErrors) {
  EXPECT_DOUBLE_EQ(eigenvalue_sqerr(1.5, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(amse_eigenvalue({1.5, 0.5, 1.0}, 1.0), 0.5 / 3.0);
  EXPECT_THROW(amse_eigenvalue({}, 1.0), InputError);
  EXPECT_THROW(eigenvalue_sqerr(1.0, 0.0), InputError);
}
