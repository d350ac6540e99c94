#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hoqt/compressor.hpp"

#include <string>
#include <vector>

using namespace hoqt;

namespace {

Mat random_density(std::int64_t d, RandomSource& rng) {
  Mat g = gaussian_matrix(d, d, rng);
  Mat rho = g * g.adjoint();
  return rho / rho.trace().real();
}

LabeledOperator blob(std::int64_t dim, const Mat& m) {
  return LabeledOperator::square({{"x", dim}}, m);
}

}  // namespace

TEST_CASE("build_psi: channel predicates, degenerate case, budget guard") {
  auto psi = build_psi(2, 3, 3);
  auto rep = validate_channel(psi.choi, 1e-9);
  CHECK(rep.cp);
  CHECK(rep.tp);
  CHECK(rep.tp_residual < 1e-10);
  CHECK(rep.min_eig > -1e-10);

  // One system, one-dimensional output: the map is rho -> Tr(rho), whose
  // Choi operator is the identity on the input.
  auto tiny = build_psi(1, 2, 1);
  CHECK((tiny.choi.op.mat() - Mat::Identity(2, 2)).norm() < 1e-12);

  CHECK_THROWS_AS(build_psi(2, 4, 6), Error);
  CHECK_THROWS_AS(build_psi(3, 2, 2), Error);
}

TEST_CASE("build_psi at d = D reproduces the exact twirl channel") {
  for (int n = 2; n <= 3; ++n) {
    auto psi = build_psi(2, 2, n);
    auto tw = twirl_channel_choi(2, n);
    CHECK((psi.choi.op.mat() - tw.op.mat()).norm() < 1e-9);
  }
}

TEST_CASE("apply_psi: trace, encoded mixed state, contraction oracle") {
  RandomSource rng(41);
  auto psi = build_psi(2, 3, 2);

  // Pure product input keeps unit trace.
  Vec a = Vec::Zero(3), b = Vec::Zero(3);
  a(0) = 1.0;
  b(2) = 1.0;
  Vec prod(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) prod(i * 3 + j) = a(i) * b(j);
  auto pure = apply_psi(psi, blob(9, prod * prod.adjoint()));
  CHECK(pure.mat().trace().real() == doctest::Approx(1.0));

  // The maximally mixed state encoded through any isometry comes out
  // maximally mixed.
  Mat v = haar_isometry(2, 3, rng);
  Mat enc = tensor_power(v, 2) * (Mat::Identity(4, 4) / 4.0) *
            tensor_power(v, 2).adjoint();
  auto mixed = apply_psi(psi, blob(9, enc));
  CHECK((mixed.mat() - Mat::Identity(4, 4) / 4.0).norm() < 1e-12);

  // Direct block action agrees with contracting the Choi operator.
  for (int trial = 0; trial < 5; ++trial) {
    Mat rho = random_density(9, rng);
    auto fast = apply_psi(psi, blob(9, rho));
    CHECK((fast.mat() - apply_channel(psi.choi, rho)).norm() < 1e-10);
  }
  auto psi3 = build_psi(2, 3, 3);
  Mat rho3 = random_density(27, rng);
  CHECK((apply_psi(psi3, blob(27, rho3)).mat() -
         apply_channel(psi3.choi, rho3)).norm() < 1e-10);

  CHECK_THROWS_AS(apply_psi(psi, blob(4, Mat::Identity(4, 4))), Error);
}

TEST_CASE("twirl_channel_choi: depolarizing, idempotent, sampled average") {
  auto one = twirl_channel_choi(2, 1);
  CHECK((one.op.mat() - 0.5 * Mat::Identity(4, 4)).norm() < 1e-12);

  auto tw = twirl_channel_choi(2, 2);
  auto rep = validate_channel(tw, 1e-9);
  CHECK(rep.cp);
  CHECK(rep.tp);

  // Averaging is a projection: composing the channel with itself changes
  // nothing.
  auto twice = link_product(tw.renamed({{"O", "M"}}), tw.renamed({{"I", "M"}}));
  CHECK((permute_systems(twice.op, {"I", "O"}).mat() - tw.op.mat()).norm() <
        1e-9);

  // Monte Carlo oracle: empirical average of collective conjugations,
  // compared as normalized Choi states.
  RandomSource rng(42);
  Mat avg = Mat::Zero(16, 16);
  int samples = 10000;
  for (int i = 0; i < samples; ++i) {
    Mat u2 = tensor_power(haar_unitary(2, rng), 2);
    Vec dual = dual_ket(u2, "I", "O").mat() / 2.0;
    avg += (dual * dual.adjoint()) / static_cast<double>(samples);
  }
  CHECK((avg - tw.op.mat() / 4.0).norm() < 0.02);
}

TEST_CASE("encode-compress equals the collective average for every encoder") {
  // Trivial embedding.
  CHECK(lemma2_residual(Mat::Identity(3, 2), 2) < 1e-9);

  // Haar encoders, two and three systems.
  RandomSource rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat v = haar_isometry(2, 3, rng);
    worst = std::max(worst, lemma2_residual(v, 2));
    worst = std::max(worst, lemma2_residual(v, 3));
  }
  CHECK(worst < 1e-9);

  // Unitary encoder: compression reduces to the average itself.
  CHECK(lemma2_residual(haar_unitary(2, rng), 2) < 1e-9);
}

TEST_CASE("compressed output does not depend on the encoding isometry") {
  RandomSource rng(44);
  Mat rho = random_density(4, rng);
  auto psi3 = build_psi(2, 3, 2);
  auto psi4 = build_psi(2, 4, 2);

  auto encode = [&](const Mat& v) -> Mat {
    Mat vv = tensor_power(v, 2);
    return vv * rho * vv.adjoint();
  };
  Mat v1 = haar_isometry(2, 3, rng);
  Mat v2 = haar_isometry(2, 3, rng);
  Mat v3 = haar_isometry(2, 4, rng);
  Mat out1 = apply_psi(psi3, blob(9, encode(v1))).mat();
  Mat out2 = apply_psi(psi3, blob(9, encode(v2))).mat();
  Mat out3 = apply_psi(psi4, blob(16, encode(v3))).mat();
  CHECK((out1 - out2).norm() < 1e-9);
  CHECK((out1 - out3).norm() < 1e-9);

  // Cross-module oracle: the common value is the exact collective average.
  Mat avg = twirl(blob(4, rho), 2, 2).mat();
  CHECK((out1 - avg).norm() < 1e-9);
}

TEST_CASE("twirl channel absorbs collective rotations on either side") {
  RandomSource rng(45);
  auto tw = twirl_channel_choi(2, 2);
  for (int trial = 0; trial < 3; ++trial) {
    Mat u2 = tensor_power(haar_unitary(2, rng), 2);
    auto ju_in = choi_of_isometry(u2, "I", "M");
    auto pre = link_product(ju_in, tw.renamed({{"I", "M"}}));
    CHECK((permute_systems(pre.op, {"I", "O"}).mat() - tw.op.mat()).norm() <
          1e-9);
    auto ju_out = choi_of_isometry(u2, "M", "O");
    auto post = link_product(tw.renamed({{"O", "M"}}), ju_out);
    CHECK((permute_systems(post.op, {"I", "O"}).mat() - tw.op.mat()).norm() <
          1e-9);
  }
}
