#include "hoqt/compressor.hpp"

#include "hoqt/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hoqt {

namespace {

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

PsiChannel build_psi(std::int64_t d, std::int64_t D, int n,
                     std::int64_t budget) {
  require(d >= 1 && D >= d, "build_psi: need D >= d >= 1");
  require(n >= 1, "build_psi: need n >= 1");
  // Grow D^n incrementally so an oversized n trips the guard instead of
  // overflowing.
  std::int64_t Dn = 1;
  for (int i = 0; i < n; ++i) {
    Dn *= D;
    require(Dn <= budget, "build_psi: D^n exceeds the memory budget");
  }
  std::int64_t dn = ipow(d, n);

  const SchurData& in_data = schur_data(D, n);
  const SchurData& out_data = schur_data(d, n);

  // Kraus family, one batch per input block. Blocks that survive at
  // dimension d get the transfer family
  //   K_{u,a} = du_out^{-1/2} W_out (|u><a| (x) 1_S) W_in^dag,
  // blocks that do not get the measure-and-replace family
  //   K_{i,c} = d^{-n/2} |i> <col_c(W_in)|.
  std::vector<Mat> kraus;
  for (const auto& blk_in : in_data.blocks) {
    if (blk_in.shape.length() <= d) {
      const SchurBlock& blk_out = out_data.block(blk_in.shape);
      std::int64_t ds = blk_in.ds;
      double scale = 1.0 / std::sqrt(static_cast<double>(blk_out.du));
      for (std::int64_t u = 0; u < blk_out.du; ++u) {
        // Rows u*ds..u*ds+ds-1 of the output isometry, columns a*ds.. of the
        // input one; the unit |u><a| (x) 1_S selects them directly.
        Mat lift = blk_out.isometry.middleCols(u * ds, ds);
        for (std::int64_t a = 0; a < blk_in.du; ++a)
          kraus.push_back(scale * lift *
                          blk_in.isometry.middleCols(a * ds, ds).adjoint());
      }
    } else {
      double scale = 1.0 / std::sqrt(static_cast<double>(dn));
      for (std::int64_t i = 0; i < dn; ++i)
        for (std::int64_t c = 0; c < blk_in.isometry.cols(); ++c) {
          Mat k = Mat::Zero(dn, Dn);
          k.row(i) = scale * blk_in.isometry.col(c).adjoint();
          kraus.push_back(std::move(k));
        }
    }
  }

  PsiChannel psi;
  psi.d = d;
  psi.D = D;
  psi.n = n;
  psi.choi = choi_from_kraus(kraus, "I", "O");
  auto rep = validate_channel(psi.choi, 1e-9);
  require(rep.cp && rep.tp, "build_psi: assembled map fails the channel test");
  return psi;
}

LabeledOperator apply_psi(const PsiChannel& psi, const LabeledOperator& rho) {
  require(rho.square_aligned(), "apply_psi: input must be square aligned");
  std::int64_t dn = ipow(psi.d, psi.n), Dn = ipow(psi.D, psi.n);
  require(rho.row_dim() == Dn, "apply_psi: input dimension mismatch");

  const SchurData& in_data = schur_data(psi.D, psi.n);
  const SchurData& out_data = schur_data(psi.d, psi.n);
  Mat out = Mat::Zero(dn, dn);
  cplx carried = 0.0;
  for (const auto& blk_in : in_data.blocks) {
    if (blk_in.shape.length() > psi.d) continue;
    const SchurBlock& blk_out = out_data.block(blk_in.shape);
    std::int64_t ds = blk_in.ds;
    Mat inside = blk_in.isometry.adjoint() * rho.mat() * blk_in.isometry;
    Mat reduced = Mat::Zero(ds, ds);
    for (std::int64_t a = 0; a < blk_in.du; ++a)
      reduced += inside.block(a * ds, a * ds, ds, ds);
    carried += reduced.trace();
    double w = 1.0 / static_cast<double>(blk_out.du);
    for (std::int64_t u = 0; u < blk_out.du; ++u)
      out += w * blk_out.isometry.middleCols(u * ds, ds) * reduced *
             blk_out.isometry.middleCols(u * ds, ds).adjoint();
  }
  out += ((rho.mat().trace() - carried) / static_cast<double>(dn)) *
         Mat::Identity(dn, dn);

  std::vector<Space> spaces;
  for (int i = 0; i < psi.n; ++i)
    spaces.push_back({"q" + std::to_string(i + 1), psi.d});
  return LabeledOperator::square(std::move(spaces), std::move(out));
}

ChoiOperator twirl_channel_choi(std::int64_t d, int n) {
  require(d >= 1 && n >= 1, "twirl_channel_choi: need d, n >= 1");
  std::int64_t dn = ipow(d, n);
  Mat j = Mat::Zero(dn * dn, dn * dn);
  std::vector<Space> one{{"x", dn}};
  for (std::int64_t i = 0; i < dn; ++i)
    for (std::int64_t i2 = 0; i2 < dn; ++i2) {
      Mat unit = Mat::Zero(dn, dn);
      unit(i, i2) = 1.0;
      j.block(i * dn, i2 * dn, dn, dn) =
          twirl(LabeledOperator::square(one, unit), d, n).mat();
    }
  return ChoiOperator(
      LabeledOperator::square({{"I", dn}, {"O", dn}}, std::move(j)), {"I"},
      {"O"});
}

double lemma2_residual(const Mat& v, int n) {
  std::int64_t d = v.cols(), D = v.rows();
  auto psi = build_psi(d, D, n);
  auto jv = choi_of_isometry(tensor_power(v, n), "I", "M");
  auto chain = link_product(jv, psi.choi.renamed({{"I", "M"}}));
  auto target = twirl_channel_choi(d, n);
  Mat got = permute_systems(chain.op, {"I", "O"}).mat();
  return (got - target.op.mat()).norm();
}

}  // namespace hoqt
