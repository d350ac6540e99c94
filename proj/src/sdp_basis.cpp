// Sampled spanning sets of isometry tensor powers, detected through a small
// Gram matrix instead of materialized tensors.

#include "hoqt/sdp.hpp"

#include <cmath>
#include <string>

namespace hoqt {

namespace {

// <vec((|V>><<V|)^n), vec((|W>><<W|)^n)> for unit-normalized vectors is
// |Tr(V^dag W) / d|^(2n): the dual kets overlap as Tr(V^dag W) and the
// rank-one projectors square that, the tensor power raises it to n, and the
// vector norms contribute d^n each.
double gram_entry(const Mat& v, const Mat& w, std::int64_t d, int n) {
  const cplx overlap = (v.adjoint() * w).trace() / static_cast<double>(d);
  return std::pow(std::norm(overlap), n);
}

}  // namespace

IsometrySpanBasis isometry_span_basis(std::int64_t d, std::int64_t D, int n,
                                      RandomSource& rng,
                                      const SpanBasisOptions& opt) {
  require(d >= 1 && D >= d, "isometry_span_basis: need 1 <= d <= D");
  require(n >= 1, "isometry_span_basis: need n >= 1");

  IsometrySpanBasis basis;
  basis.d = d;
  basis.D = D;
  basis.n = n;
  basis.seed = rng.seed();

  const double ambient = std::pow(static_cast<double>(d * D), 2.0 * n);
  const double candidate_cap =
      std::max(static_cast<double>(opt.candidate_factor) * ambient,
               static_cast<double>(opt.max_rank) * 8.0);

  // Lower-triangular Cholesky factor of the unit-diagonal Gram of the
  // accepted set, grown one row per acceptance. The Schur complement of a
  // candidate against the current set is 1 - |y|^2 with L y = g, which is
  // exactly the squared distance from the candidate to the span.
  RMat chol(64, 64);
  int rejects = 0;
  double drawn = 0.0;
  while (rejects < opt.stable_rejects) {
    if (drawn >= candidate_cap) {
      fail("isometry_span_basis: candidate cap " +
           std::to_string(static_cast<std::int64_t>(candidate_cap)) +
           " hit before saturation (rank " + std::to_string(basis.rank()) +
           ")");
    }
    drawn += 1.0;
    const Mat cand = haar_isometry(d, D, rng);
    const int r = basis.rank();
    double schur = 1.0;
    RVec y(r);
    if (r > 0) {
      RVec g(r);
      for (int i = 0; i < r; ++i) {
        g[i] = gram_entry(basis.isometries[i], cand, d, n);
      }
      y = chol.topLeftCorner(r, r)
              .triangularView<Eigen::Lower>()
              .solve(g);
      schur = 1.0 - y.squaredNorm();
    }
    if (schur <= opt.accept_tol) {
      ++rejects;
      continue;
    }
    require(r < opt.max_rank, "isometry_span_basis: rank cap " +
                                  std::to_string(opt.max_rank) + " exceeded");
    if (r >= chol.rows()) {
      chol.conservativeResize(2 * chol.rows(), 2 * chol.cols());
    }
    chol.row(r).head(r) = y.transpose();
    chol(r, r) = std::sqrt(schur);
    basis.isometries.push_back(cand);
    rejects = 0;
  }
  basis.saturated = true;

  const Mat gram = span_basis_gram(basis);
  const auto [eigs, vecs] = herm_eig(gram);
  basis.gram_min_eig = eigs.minCoeff();
  require(basis.gram_min_eig > 1e-9,
          "isometry_span_basis: accepted set is too ill conditioned "
          "(gram min eig " +
              std::to_string(basis.gram_min_eig) + ")");
  return basis;
}

Mat span_basis_gram(const IsometrySpanBasis& basis) {
  const int r = basis.rank();
  Mat gram(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      const double g =
          gram_entry(basis.isometries[i], basis.isometries[j], basis.d,
                     basis.n);
      gram(i, j) = g;
      gram(j, i) = g;
    }
  }
  return gram;
}

const char* sdp_task_name(SdpTask task) {
  switch (task) {
    case SdpTask::kInversion:
      return "inversion";
    case SdpTask::kPseudoConjugation:
      return "pseudo-conjugation";
    case SdpTask::kConjugation:
      return "conjugation";
    case SdpTask::kTransposition:
      return "transposition";
    case SdpTask::kSuccessOrDraw:
      return "success-or-draw";
  }
  fail("sdp_task_name: unknown task");
}

}  // namespace hoqt
