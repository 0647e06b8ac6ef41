// Fits J = 20000, I = 50 and fails if any single allocation reaches
// J^2 * 8 / 64 bytes, i.e. 1/64 of one dense J x J matrix.

#include <cstdio>

#include "alloc_tracker.hpp"
#include "face.hpp"

int main() {
  using namespace face;
  const Index J = 20000, I = 50;
  const Matrix y = generate_sample(CovModel::from_case(1), J, I, 7);
  alloc_tracker::start();
  const SmootherFactor f = factorize_smoother(BasisSpec::equispaced(J, 100));
  const FaceFit fit = face_fit(y, f);
  const Scores s = scores_blup(fit);
  const std::size_t largest = alloc_tracker::stop();
  const std::size_t limit = std::size_t(J) * std::size_t(J) * 8 / 64;
  std::printf("largest allocation %zu bytes, limit %zu bytes (N = %ld, xi %ldx%ld)\n", largest, limit,
              long(fit.n_selected), long(s.xi.rows()), long(s.xi.cols()));
  if (largest >= limit) {
    std::printf("FAIL: allocation of J x J order\n");
    return 1;
  }
  std::printf("PASS\n");
  return 0;
}
