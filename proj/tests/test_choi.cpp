#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hoqt/choi.hpp"

#include <map>
#include <string>
#include <vector>

using namespace hoqt;

namespace {

double frob(const Mat& m) { return m.norm(); }

// Independent dual-vector oracle: |K>> laid out with the input index major.
Vec oracle_dual(const Mat& k) {
  Vec v(k.rows() * k.cols());
  for (std::int64_t i = 0; i < k.cols(); ++i)
    for (std::int64_t o = 0; o < k.rows(); ++o)
      v(i * k.rows() + o) = k(o, i);
  return v;
}

Mat random_density(std::int64_t d, RandomSource& rng) {
  Mat g = gaussian_matrix(d, d, rng);
  Mat rho = g * g.adjoint();
  return rho / rho.trace().real();
}

// Split a plain-labeled channel Choi into named tensor factors on each side.
ChoiOperator shaped_cptp(std::int64_t din, std::int64_t dout, int rank,
                         RandomSource& rng, const std::vector<Space>& in_parts,
                         const std::vector<Space>& out_parts) {
  auto j = random_cptp(din, dout, rank, rng, "_in", "_out");
  auto op = split_space(split_space(j.op, "_in", in_parts), "_out", out_parts);
  std::vector<std::string> ins, outs;
  for (const auto& s : in_parts) ins.push_back(s.label);
  for (const auto& s : out_parts) outs.push_back(s.label);
  return ChoiOperator(op, ins, outs);
}

// Causally ordered two-slot network built from three random channels chained
// through explicit memories: P -> I(first) -> O(first) -> I(second) ->
// O(second) -> F. All local dimensions 2.
Mat two_slot_circuit(RandomSource& rng, const std::string& first_in,
                     const std::string& first_out, const std::string& second_in,
                     const std::string& second_out,
                     const std::vector<std::string>& canonical) {
  auto j1 = shaped_cptp(2, 4, 2, rng, {{"P", 2}},
                        {{first_in, 2}, {"m1", 2}});
  auto j2 = shaped_cptp(4, 4, 2, rng, {{"m1", 2}, {first_out, 2}},
                        {{second_in, 2}, {"m2", 2}});
  auto j3 = shaped_cptp(4, 2, 2, rng, {{"m2", 2}, {second_out, 2}}, {{"F", 2}});
  auto c = link_product(link_product(j1, j2), j3);
  return permute_systems(c.op, canonical).mat();
}

}  // namespace

TEST_CASE("choi_of_isometry: identity, trace, action oracle") {
  auto jid = choi_of_isometry(Mat::Identity(2, 2));
  auto bell = max_entangled(2, "I", "O").outer();
  CHECK(frob(jid.op.mat() - 2.0 * bell.mat()) < 1e-14);

  RandomSource rng(21);
  Mat v = haar_isometry(2, 4, rng);
  auto j = choi_of_isometry(v);
  CHECK(j.op.mat().trace().real() == doctest::Approx(2.0));
  auto rep = validate_channel(j, 1e-9);
  CHECK(rep.cp);
  CHECK(rep.tp);

  // Rank one: a single eigenvalue above the noise floor.
  auto eig = herm_eig(j.op.mat());
  int big = 0;
  for (std::int64_t i = 0; i < eig.first.size(); ++i)
    if (eig.first(i) > 1e-9) ++big;
  CHECK(big == 1);

  // Conjugation oracle.
  Mat rho = random_density(2, rng);
  CHECK(frob(apply_channel(j, rho) - v * rho * v.adjoint()) < 1e-12);

  Mat bad = Mat::Ones(3, 2);
  CHECK_THROWS_AS(choi_of_isometry(bad), Error);
}

TEST_CASE("choi_from_kraus: rank, trace preservation, outer-sum oracle") {
  RandomSource rng(22);
  Mat u = haar_unitary(3, rng);
  auto ju = choi_from_kraus({u});
  auto eig = herm_eig(ju.op.mat());
  int big = 0;
  for (std::int64_t i = 0; i < eig.first.size(); ++i)
    if (eig.first(i) > 1e-9) ++big;
  CHECK(big == 1);

  // Uniform Pauli Kraus family: trace preserving by construction.
  Mat sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  sz << 1, 0, 0, -1;
  std::vector<Mat> pauli{0.5 * Mat::Identity(2, 2), 0.5 * sx, 0.5 * sy,
                         0.5 * sz};
  auto jdep = choi_from_kraus(pauli);
  auto red = partial_trace(jdep.op, {"O"});
  CHECK(frob(red.mat() - Mat::Identity(2, 2)) < 1e-14);
  CHECK(validate_channel(jdep, 1e-10).tp);

  // Independent outer-product oracle over three random Kraus operators.
  std::vector<Mat> ks;
  for (int i = 0; i < 3; ++i) ks.push_back(gaussian_matrix(3, 2, rng));
  Mat expect = Mat::Zero(6, 6);
  for (const auto& k : ks) {
    Vec d = oracle_dual(k);
    expect += d * d.adjoint();
  }
  CHECK(frob(choi_from_kraus(ks).op.mat() - expect) < 1e-12);

  CHECK_THROWS_AS(choi_from_kraus({Mat::Identity(2, 2), Mat::Identity(3, 3)}),
                  Error);
}

TEST_CASE("link_product: identity link, composition, tensor, scalar") {
  RandomSource rng(23);

  // Linking with an identity channel only renames the wire.
  auto jv = random_cptp(2, 3, 2, rng, "I", "O");
  auto jid = choi_of_isometry(Mat::Identity(3, 3), "O", "Z");
  auto linked = link_product(jv, jid);
  auto renamed = jv.renamed({{"O", "Z"}});
  auto aligned = permute_systems(linked.op, {"I", "Z"});
  CHECK(frob(aligned.mat() - renamed.op.mat()) < 1e-12);

  // Unitary composition.
  Mat u1 = haar_unitary(2, rng), u2 = haar_unitary(2, rng);
  auto j1 = choi_of_isometry(u1, "I", "M");
  auto j2 = choi_of_isometry(u2, "M", "O");
  auto chain = link_product(j1, j2);
  auto direct = choi_of_isometry(u2 * u1, "I", "O");
  CHECK(frob(permute_systems(chain.op, {"I", "O"}).mat() - direct.op.mat()) <
        1e-10);

  // Disjoint labels: plain tensor product.
  auto ja = random_cptp(2, 2, 2, rng, "A", "B");
  auto jb = random_cptp(2, 2, 2, rng, "C", "D");
  auto tens = link_product(ja, jb);
  CHECK(frob(permute_systems(tens.op, {"A", "B", "C", "D"}).mat() -
             kron(ja.op, jb.op).mat()) < 1e-12);

  // Commutativity up to reordering.
  auto fwd = link_product(j1, j2);
  auto bwd = link_product(j2, j1);
  CHECK(frob(permute_systems(fwd.op, {"I", "O"}).mat() -
             permute_systems(bwd.op, {"I", "O"}).mat()) < 1e-12);

  // Associativity on a three-channel chain.
  auto a = random_cptp(2, 3, 2, rng, "I", "M1");
  auto b = random_cptp(3, 2, 2, rng, "M1", "M2");
  auto c = random_cptp(2, 2, 2, rng, "M2", "O");
  auto left = link_product(link_product(a, b), c);
  auto right = link_product(a, link_product(b, c));
  CHECK(frob(permute_systems(left.op, {"I", "O"}).mat() -
             permute_systems(right.op, {"I", "O"}).mat()) < 1e-10);

  // Full contraction gives the entrywise pairing Tr(rho E^T).
  Mat rho = random_density(3, rng);
  Mat eff = gaussian_matrix(3, 3, rng);
  eff = eff * eff.adjoint();
  ChoiOperator state(LabeledOperator::square({{"X", 3}}, rho), {}, {"X"});
  ChoiOperator effect(LabeledOperator::square({{"X", 3}}, eff), {"X"}, {});
  auto paired = link_product(state, effect);
  CHECK(paired.op.rows().empty());
  cplx expect = (rho * eff.transpose()).trace();
  CHECK(std::abs(paired.op.mat()(0, 0) - expect) < 1e-12);

  // Channel-composition invariant over 50 random chains.
  for (int trial = 0; trial < 50; ++trial) {
    std::int64_t d1 = 2 + (trial % 2), d2 = 2 + ((trial / 2) % 2), d3 = 2;
    auto l1 = random_cptp(d1, d2, 2, rng, "I", "M");
    auto l2 = random_cptp(d2, d3, 2, rng, "M", "O");
    Mat input = random_density(d1, rng);
    Mat stepwise = apply_channel(l2, apply_channel(l1, input));
    Mat fused = apply_channel(link_product(l1, l2), input);
    CHECK(frob(stepwise - fused) < 1e-9);
  }

  // Shared labels must agree in dimension.
  auto bad = random_cptp(2, 2, 1, rng, "I", "M");
  auto badder = random_cptp(3, 2, 2, rng, "M", "O");
  CHECK_THROWS_AS(link_product(bad, badder), Error);
}

TEST_CASE("validate_channel: isometry, negative operator, perturbation") {
  RandomSource rng(24);
  auto j = choi_of_isometry(haar_isometry(2, 3, rng));
  auto rep = validate_channel(j, 1e-9);
  CHECK(rep.cp);
  CHECK(rep.tp);

  ChoiOperator neg(LabeledOperator::square({{"I", 2}, {"O", 2}},
                                           -Mat::Identity(4, 4)),
                   {"I"}, {"O"});
  auto nrep = validate_channel(neg, 1e-9);
  CHECK_FALSE(nrep.cp);
  CHECK(nrep.min_eig < 0.0);

  auto good = random_cptp(2, 2, 2, rng);
  CHECK(validate_channel(good, 1e-9).cp);
  CHECK(validate_channel(good, 1e-9).tp);

  Mat h = gaussian_matrix(4, 4, rng);
  h = 0.5 * (h + h.adjoint());
  h *= 1e-3 / h.norm();
  ChoiOperator bumped(LabeledOperator::square(good.op.rows(),
                                              good.op.mat() + h),
                      good.ins, good.outs);
  auto brep = validate_channel(bumped, 1e-6);
  CHECK_FALSE(brep.tp);
}

TEST_CASE("comb_constraints: one slot, both classes coincide") {
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 3}};
  auto par = comb_constraints(CombClass::kParallel, sig);
  auto seq = comb_constraints(CombClass::kSequential, sig);
  auto gen = comb_constraints(CombClass::kGeneral, sig);
  RandomSource rng(25);
  std::int64_t n = sig.total_dim();
  for (int trial = 0; trial < 20; ++trial) {
    Mat x = gaussian_matrix(n, n, rng);
    x = 0.5 * (x + x.adjoint());
    Mat pp = par.project(x);
    CHECK(frob(pp - seq.project(x)) < 1e-11);
    CHECK(frob(pp - gen.project(x)) < 1e-11);
    // Idempotence and the trace pin.
    CHECK(frob(par.project(pp) - pp) < 1e-11);
    CHECK(pp.trace().real() == doctest::Approx(sig.comb_trace()));
  }
}

TEST_CASE("comb_constraints: circuit combs satisfy their classes") {
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 2}, {2, 2}};
  auto par = comb_constraints(CombClass::kParallel, sig);
  auto seq = comb_constraints(CombClass::kSequential, sig);
  auto gen = comb_constraints(CombClass::kGeneral, sig);
  std::vector<std::string> canonical{"P", "I1", "O1", "I2", "O2", "F"};

  RandomSource rng(26);
  // Ordered circuit: slot 1 before slot 2.
  Mat c12 = two_slot_circuit(rng, "I1", "O1", "I2", "O2", canonical);
  CHECK(seq.residual(c12) < 1e-9);
  CHECK(gen.residual(c12) < 1e-9);
  // Generic ordered circuits signal through the slots, which the
  // parallel class forbids.
  CHECK(par.residual(c12) > 1e-3);

  // No-signalling circuit: both slot inputs prepared up front, both outputs
  // read out at the end, memory around the slots.
  auto pre = shaped_cptp(2, 8, 2, rng, {{"P", 2}},
                         {{"I1", 2}, {"I2", 2}, {"mem", 2}});
  auto post = shaped_cptp(8, 2, 4, rng, {{"O1", 2}, {"O2", 2}, {"mem", 2}},
                          {{"F", 2}});
  Mat cpar = permute_systems(link_product(pre, post).op, canonical).mat();
  CHECK(par.residual(cpar) < 1e-9);
  CHECK(seq.residual(cpar) < 1e-9);
  CHECK(gen.residual(cpar) < 1e-9);

  // Mixture of the two orderings: general but not causally ordered.
  Mat c21 = two_slot_circuit(rng, "I2", "O2", "I1", "O1", canonical);
  Mat mix = 0.5 * (c12 + c21);
  CHECK(gen.residual(mix) < 1e-9);
  CHECK(seq.residual(mix) > 1e-3);
}

TEST_CASE("comb_constraints: affine containment chains") {
  RandomSource rng(27);
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 2}, {2, 2}};
  auto par = comb_constraints(CombClass::kParallel, sig);
  auto seq = comb_constraints(CombClass::kSequential, sig);
  auto gen = comb_constraints(CombClass::kGeneral, sig);
  std::int64_t n = sig.total_dim();
  for (int trial = 0; trial < 10; ++trial) {
    Mat x = gaussian_matrix(n, n, rng);
    x = 0.5 * (x + x.adjoint());
    Mat cp = par.project(x);
    CHECK(seq.residual(cp) < 1e-9);
    CHECK(gen.residual(cp) < 1e-9);
    Mat cs = seq.project(x);
    CHECK(gen.residual(cs) < 1e-9);
  }

  // Three slots, all local dimensions 2.
  SlotSignature sig3;
  sig3.dim_p = 2;
  sig3.dim_f = 2;
  sig3.slots = {{2, 2}, {2, 2}, {2, 2}};
  auto par3 = comb_constraints(CombClass::kParallel, sig3);
  auto seq3 = comb_constraints(CombClass::kSequential, sig3);
  auto gen3 = comb_constraints(CombClass::kGeneral, sig3);
  std::int64_t n3 = sig3.total_dim();
  Mat x3 = gaussian_matrix(n3, n3, rng);
  x3 = 0.5 * (x3 + x3.adjoint());
  Mat cp3 = par3.project(x3);
  CHECK(seq3.residual(cp3) < 1e-8);
  CHECK(gen3.residual(cp3) < 1e-8);
  Mat cs3 = seq3.project(x3);
  CHECK(gen3.residual(cs3) < 1e-8);

  SlotSignature sig4;
  sig4.dim_p = 1;
  sig4.dim_f = 1;
  sig4.slots = {{2, 2}, {2, 2}, {2, 2}, {2, 2}};
  CHECK_THROWS_AS(comb_constraints(CombClass::kGeneral, sig4), Error);
}

TEST_CASE("comb_constraints: normal form matches the projector") {
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 2}};
  auto seq = comb_constraints(CombClass::kSequential, sig);
  auto rows = seq.normal_form();
  CHECK(rows.size() > 3);

  RandomSource rng(28);
  std::int64_t n = sig.total_dim();
  Mat x = gaussian_matrix(n, n, rng);
  x = 0.5 * (x + x.adjoint());
  Mat c = seq.project(x);

  double worst_feasible = 0.0, worst_raw = 0.0;
  for (const auto& row : rows) {
    Mat a = Mat(row.a);
    CHECK(frob(a - a.adjoint()) < 1e-12);
    worst_feasible = std::max(worst_feasible,
                              std::abs((a * c).trace().real() - row.b));
    worst_raw = std::max(worst_raw, std::abs((a * x).trace().real() - row.b));
  }
  CHECK(worst_feasible < 1e-9);
  CHECK(worst_raw > 1e-3);
}

TEST_CASE("validate_superinstrument: split comb passes, negative branch fails") {
  RandomSource rng(29);
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 2}, {2, 2}};
  std::vector<std::string> canonical{"P", "I1", "O1", "I2", "O2", "F"};
  Mat c = two_slot_circuit(rng, "I1", "O1", "I2", "O2", canonical);

  auto spaces = sig.spaces();
  auto as_choi = [&](const Mat& m) {
    return ChoiOperator(LabeledOperator::square(spaces, m),
                        {"P", "O1", "O2"}, {"I1", "I2", "F"});
  };
  Superinstrument si{as_choi(0.5 * c), as_choi(0.5 * c),
                     CombClass::kSequential, sig};
  auto rep = validate_superinstrument(si, 1e-8);
  CHECK(rep.pass);

  // Push one branch just below zero along the softest eigenvector while the
  // sum stays a valid comb.
  auto eig = herm_eig(0.5 * c);
  Vec soft = eig.second.col(0);
  double eps = eig.first(0) + 1e-3;
  Mat bump = eps * (soft * soft.adjoint());
  Superinstrument bad{as_choi(0.5 * c - bump), as_choi(0.5 * c + bump),
                      CombClass::kSequential, sig};
  auto brep = validate_superinstrument(bad, 1e-8);
  CHECK_FALSE(brep.pass);
  CHECK(brep.min_eig_s < -1e-4);
  CHECK(brep.comb_residual < 1e-9);
}

TEST_CASE("random_cptp: 100 draws pass the channel predicates") {
  RandomSource rng(30);
  for (int trial = 0; trial < 50; ++trial) {
    auto j = random_cptp(2, 3, 2, rng);
    auto rep = validate_channel(j, 1e-9);
    CHECK(rep.cp);
    CHECK(rep.tp);
  }
  for (int trial = 0; trial < 50; ++trial) {
    auto j = random_cptp(3, 2, 3, rng);
    auto rep = validate_channel(j, 1e-9);
    CHECK(rep.cp);
    CHECK(rep.tp);
  }
  // Too few Kraus operators to preserve trace from a larger input space.
  RandomSource starved(1);
  CHECK_THROWS_AS(random_cptp(4, 2, 1, starved), Error);
}

TEST_CASE("superinstruments induce instruments on slot fillings") {
  RandomSource rng(31);
  SlotSignature sig;
  sig.dim_p = 2;
  sig.dim_f = 2;
  sig.slots = {{2, 2}, {2, 2}};
  std::vector<std::string> canonical{"P", "I1", "O1", "I2", "O2", "F"};
  auto spaces = sig.spaces();
  auto as_choi = [&](const Mat& m) {
    return ChoiOperator(LabeledOperator::square(spaces, m),
                        {"P", "O1", "O2"}, {"I1", "I2", "F"});
  };
  auto check_instrument = [&](const ChoiOperator& s, const ChoiOperator& f,
                              const ChoiOperator& fill) {
    auto sj = link_product(s, fill);
    auto fj = link_product(f, fill);
    auto srep = validate_channel(sj, 1e-8);
    auto frep = validate_channel(fj, 1e-8);
    CHECK(srep.min_eig > -1e-8);
    CHECK(frep.min_eig > -1e-8);
    ChoiOperator total(LabeledOperator(sj.op.rows(), sj.op.cols(),
                                       sj.op.mat() + fj.op.mat()),
                       sj.ins, sj.outs);
    auto trep = validate_channel(total, 1e-8);
    CHECK(trep.tp);
    CHECK(trep.cp);
  };

  // Parallel network, joint filling with an ancilla of dimension 2.
  auto pre = shaped_cptp(2, 8, 2, rng, {{"P", 2}},
                         {{"I1", 2}, {"I2", 2}, {"mem", 2}});
  auto post = shaped_cptp(8, 2, 4, rng, {{"O1", 2}, {"O2", 2}, {"mem", 2}},
                          {{"F", 2}});
  Mat cpar = permute_systems(link_product(pre, post).op, canonical).mat();
  auto fill_joint = shaped_cptp(8, 8, 2, rng,
                                {{"I1", 2}, {"I2", 2}, {"anc", 2}},
                                {{"O1", 2}, {"O2", 2}, {"anc2", 2}});
  check_instrument(as_choi(0.3 * cpar), as_choi(0.7 * cpar), fill_joint);

  // Ordered network, filling with memory flowing slot 1 to slot 2.
  Mat cseq = two_slot_circuit(rng, "I1", "O1", "I2", "O2", canonical);
  auto fa = shaped_cptp(2, 4, 2, rng, {{"I1", 2}}, {{"O1", 2}, {"link", 2}});
  auto fb = shaped_cptp(4, 2, 2, rng, {{"link", 2}, {"I2", 2}}, {{"O2", 2}});
  auto fill_seq = link_product(fa, fb);
  check_instrument(as_choi(0.5 * cseq), as_choi(0.5 * cseq), fill_seq);

  // Order-mixed network, independent local fillings.
  Mat c21 = two_slot_circuit(rng, "I2", "O2", "I1", "O1", canonical);
  Mat mix = 0.5 * (cseq + c21);
  auto ga = random_cptp(2, 2, 2, rng, "I1", "O1");
  auto gb = random_cptp(2, 2, 2, rng, "I2", "O2");
  auto fill_local = link_product(ga, gb);
  check_instrument(as_choi(0.4 * mix), as_choi(0.6 * mix), fill_local);
}
