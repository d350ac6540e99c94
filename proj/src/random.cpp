#include "hoqt/random.hpp"

#include <Eigen/QR>

namespace hoqt {

Mat gaussian_matrix(std::int64_t rows, std::int64_t cols, RandomSource& rng) {
  Mat g(rows, cols);
  // Row-major fill order is part of the reproducibility contract.
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) g(r, c) = rng.cnormal();
  return g;
}

Mat haar_isometry(std::int64_t d, std::int64_t D, RandomSource& rng) {
  require(d >= 1 && D >= d, "haar_isometry: need D >= d >= 1");
  Mat g = gaussian_matrix(D, d, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(D, d);
  Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  // Multiply each column by the phase of the matching R diagonal entry so the
  // distribution is exactly Haar rather than QR-gauge dependent.
  for (std::int64_t j = 0; j < d; ++j) {
    cplx rjj = r(j, j);
    double a = std::abs(rjj);
    cplx phase = a > 1e-300 ? rjj / a : cplx(1.0, 0.0);
    q.col(j) *= phase;
  }
  return q;
}

}  // namespace hoqt
