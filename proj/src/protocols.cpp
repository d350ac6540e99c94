#include "hoqt/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "hoqt/compressor.hpp"
#include "hoqt/rep.hpp"

namespace hoqt {
namespace {

// Largest joint dimension any protocol builds as a dense matrix.
constexpr std::int64_t kDimBudget = 4096;
constexpr double kPi = 3.14159265358979323846;
// Largest Choi dimension of the compressed inversion circuit; beyond this
// the run degrades to a formula-level report instead of failing.
constexpr std::int64_t kCircuitBudget = 2048;

std::int64_t ipow64(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    require(out <= (std::int64_t{1} << 40) / std::max<std::int64_t>(base, 1),
            "dimension overflow");
    out *= base;
  }
  return out;
}

int perm_sign(const Permutation& p) {
  int inv = 0;
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inv;
  return (inv % 2 == 0) ? 1 : -1;
}

double fact(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

// Sum of coeff(mu) times the isotypic projector of mu over partitions of k
// with at most dim rows, acting on (C^dim)^{tensor k}.
template <typename F>
Mat proj_combo(std::int64_t dim, int k, F coeff) {
  std::int64_t n = ipow64(dim, k);
  Mat out = Mat::Zero(n, n);
  int max_rows = static_cast<int>(std::min<std::int64_t>(dim, k));
  for (const auto& mu : partitions(k, max_rows)) {
    double c = coeff(mu);
    if (c == 0.0) continue;
    out += c * isotypic_projector(mu, dim, k).mat();
  }
  return out;
}

// Pad an operator with identities and order it to match `order`.
LabeledOperator embed_into(const LabeledOperator& op,
                           const std::vector<Space>& order) {
  std::vector<Space> rest;
  for (const auto& s : order) {
    bool held = false;
    for (const auto& t : op.rows())
      if (t.label == s.label) held = true;
    if (!held) rest.push_back(s);
  }
  LabeledOperator joined =
      rest.empty() ? op : kron(op, LabeledOperator::identity(rest));
  std::vector<std::string> names;
  names.reserve(order.size());
  for (const auto& s : order) names.push_back(s.label);
  return permute_systems(joined, names);
}

// Unnormalized maximally entangled operator sum_ab |aa><bb|, the seed that
// turns a simulated map on the second label into its Choi operator.
LabeledOperator choi_seed(std::int64_t dim, const std::string& la,
                          const std::string& lb) {
  LabeledOperator out = max_entangled(dim, la, lb).outer();
  out.mat() *= static_cast<double>(dim);
  return out;
}

// Measurement branch: trace the listed systems out of (effect x 1) * full.
// The effect must act only on traced systems.
LabeledOperator measure_and_trace(const LabeledOperator& full,
                                  const LabeledOperator& effect,
                                  const std::vector<std::string>& traced) {
  LabeledOperator e = embed_into(effect, full.rows());
  Mat prod = e.mat() * full.mat();
  return partial_trace(LabeledOperator::square(full.rows(), std::move(prod)),
                       traced);
}

// Apply (m tensor 1_right) to a ket with the given right factor dimension.
Vec apply_left(const Mat& m, const Vec& phi, std::int64_t right_dim) {
  std::int64_t rows = phi.size() / right_dim;
  require(rows * right_dim == phi.size() && m.cols() == rows,
          "apply_left: shape mismatch");
  Mat folded(rows, right_dim);
  for (std::int64_t b = 0; b < rows; ++b)
    for (std::int64_t a = 0; a < right_dim; ++a)
      folded(b, a) = phi(b * right_dim + a);
  Mat mapped = m * folded;
  Vec out(m.rows() * right_dim);
  for (std::int64_t o = 0; o < m.rows(); ++o)
    for (std::int64_t a = 0; a < right_dim; ++a)
      out(o * right_dim + a) = mapped(o, a);
  return out;
}

// Wrap a two-system labeled operator into the canonical run labels.
ChoiOperator as_run_choi(const LabeledOperator& lop, const std::string& in_l,
                         const std::string& out_l) {
  LabeledOperator p = permute_systems(lop, {in_l, out_l});
  std::vector<Space> sp = {{"P", p.rows()[0].dim}, {"F", p.rows()[1].dim}};
  return ChoiOperator(LabeledOperator::square(std::move(sp), p.mat()), {"P"},
                      {"F"});
}

ChoiOperator zero_choi(std::int64_t din, std::int64_t dout) {
  std::vector<Space> sp = {{"P", din}, {"F", dout}};
  return ChoiOperator(
      LabeledOperator::square(std::move(sp), Mat::Zero(din * dout, din * dout)),
      {"P"}, {"F"});
}

// Abort branch: keep the input-side weight operator and emit the maximally
// mixed state on a fresh output space.
ChoiOperator abort_branch(const LabeledOperator& weight_on_ref,
                          std::int64_t dout) {
  LabeledOperator w = weight_on_ref.renamed({{weight_on_ref.rows()[0].label,
                                              "P"}});
  LabeledOperator mm = LabeledOperator::square(
      {{"F", dout}},
      Mat::Identity(dout, dout) / static_cast<double>(dout));
  return ChoiOperator(kron(w, mm), {"P"}, {"F"});
}

void check_isometry(const Mat& v, const std::string& who) {
  require(v.rows() >= v.cols() && v.cols() >= 1, who + ": shape");
  Mat g = v.adjoint() * v;
  require((g - Mat::Identity(v.cols(), v.cols())).norm() <= 1e-10,
          who + ": columns are not orthonormal");
}

std::vector<std::vector<int>> sorted_subsets(int total, int pick) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(pick);
  for (int i = 0; i < pick; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = pick - 1;
    while (i >= 0 && cur[i] == total - pick + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < pick; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

double frob_gap(const ChoiOperator& a, double p, const ChoiOperator& b) {
  return (a.op.mat() - p * b.op.mat()).norm();
}

}  // namespace

AntisymObjects antisym_objects(std::int64_t d, std::int64_t D) {
  require(d >= 1 && D >= d, "antisym_objects: need D >= d >= 1");
  int di = static_cast<int>(d);
  AntisymObjects out;
  out.d = d;
  out.D = D;
  out.a_state = Vec::Zero(ipow64(d, di));
  out.v_as = Mat::Zero(ipow64(d, di - 1), d);
  double na = 1.0 / std::sqrt(fact(di));
  double nv = 1.0 / std::sqrt(fact(di - 1));
  for (const auto& sigma : all_permutations(di)) {
    double s = static_cast<double>(perm_sign(sigma));
    std::int64_t idx = 0;
    for (int t = 0; t < di; ++t) idx = idx * d + sigma[t];
    out.a_state(idx) += s * na;
    std::int64_t row = 0;
    for (int t = 0; t + 1 < di; ++t) row = row * d + sigma[t];
    out.v_as(row, sigma[di - 1]) += s * nv;
  }
  return out;
}

Mat antisym_projector(int n, std::int64_t dim) {
  require(n >= 1 && dim >= 1, "antisym_projector: need n, dim >= 1");
  std::int64_t full = ipow64(dim, n);
  if (n > dim) return Mat::Zero(full, full);
  YoungDiagram column{std::vector<int>(static_cast<size_t>(n), 1)};
  return isotypic_projector(column, dim, n).mat();
}

namespace {

PBTResources build_pbt(std::int64_t q, int m) {
  require(q >= 2 && m >= 1, "pbt_resources: need local_dim >= 2, ports >= 1");
  require(ipow64(q, 2 * m) <= kDimBudget,
          "pbt_resources: local_dim^(2 ports) exceeds the dimension budget");
  PBTResources res;
  res.local_dim = q;
  res.ports = m;

  double usq = 0.0;
  int max_rows = static_cast<int>(std::min<std::int64_t>(q, m));
  for (const auto& mu : partitions(m, max_rows)) {
    double du = static_cast<double>(dim_u(mu, static_cast<int>(q)));
    usq += du * du;
  }
  res.g = 1.0 / usq;

  std::int64_t n = ipow64(q, m);
  double qm = static_cast<double>(n);
  Mat xhalf = Mat::Zero(n, n);
  Mat xinvhalf = Mat::Zero(n, n);
  res.x_op = Mat::Zero(n, n);
  for (const auto& mu : partitions(m, max_rows)) {
    double du = static_cast<double>(dim_u(mu, static_cast<int>(q)));
    double ds = static_cast<double>(dim_sym(mu));
    double c = qm * res.g * du / ds;
    Mat pi = isotypic_projector(mu, q, m).mat();
    res.x_op += c * pi;
    xhalf += std::sqrt(c) * pi;
    xinvhalf += (1.0 / std::sqrt(c)) * pi;
  }

  res.phi = Vec::Zero(n * n);
  double norm = 1.0 / std::sqrt(qm);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t a = 0; a < n; ++a) res.phi(b * n + a) = xhalf(b, a) * norm;

  if (m == 1) {
    res.theta = Mat::Identity(1, 1);
  } else {
    res.theta = proj_combo(q, m - 1, [&](const YoungDiagram& alpha) {
      double du = static_cast<double>(dim_u(alpha, static_cast<int>(q)));
      double ds = static_cast<double>(dim_sym(alpha));
      return qm * static_cast<double>(q) * res.g * du / (m * ds);
    });
  }

  std::vector<Space> order;
  order.push_back({"P", q});
  for (int i = 1; i <= m; ++i) order.push_back({"B" + std::to_string(i), q});
  LabeledOperator sandwich = embed_into(
      LabeledOperator::square(std::vector<Space>(order.begin() + 1, order.end()),
                              xinvhalf),
      order);

  res.povm.assign(static_cast<size_t>(m) + 1, Mat());
  std::int64_t pd = q * n;
  Mat sum = Mat::Zero(pd, pd);
  for (int a = 1; a <= m; ++a) {
    std::string ba = "B" + std::to_string(a);
    LabeledOperator core = max_entangled(q, "P", ba).outer();
    if (m > 1) {
      std::vector<Space> others;
      for (int i = 1; i <= m; ++i)
        if (i != a) others.push_back({"B" + std::to_string(i), q});
      core = kron(core, LabeledOperator::square(others, res.theta));
    }
    core = embed_into(core, order);
    Mat gamma = sandwich.mat() * core.mat() * sandwich.mat();
    sum += gamma;
    res.povm[static_cast<size_t>(a)] = std::move(gamma);
  }
  res.povm[0] = Mat::Identity(pd, pd) - sum;
  return res;
}

}  // namespace

const PBTResources& pbt_resources(std::int64_t local_dim, int ports) {
  static std::map<std::pair<std::int64_t, int>,
                  std::unique_ptr<const PBTResources>>
      cache;
  static std::shared_mutex mx;
  const auto key = std::make_pair(local_dim, ports);
  {
    std::shared_lock<std::shared_mutex> lk(mx);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
  }
  auto built = std::make_unique<const PBTResources>(build_pbt(local_dim, ports));
  std::unique_lock<std::shared_mutex> lk(mx);
  auto [it, inserted] = cache.emplace(key, std::move(built));
  return *it->second;
}

ChoiOperator ref_inverse_choi(const Mat& v) {
  check_isometry(v, "ref_inverse_choi");
  std::int64_t D = v.rows(), d = v.cols();
  LabeledOperator j = dual_ket(Mat(v.adjoint()), "P", "F").outer();
  Mat pperp = Mat::Identity(D, D) - v * v.adjoint();
  LabeledOperator tail =
      kron(LabeledOperator::square({{"P", D}}, pperp.transpose()),
           LabeledOperator::identity({{"F", d}}));
  j.mat() += tail.mat();
  return ChoiOperator(std::move(j), {"P"}, {"F"});
}

ChoiOperator ref_pseudo_cc_choi(const Mat& v) {
  check_isometry(v, "ref_pseudo_cc_choi");
  std::int64_t D = v.rows(), d = v.cols();
  LabeledOperator j = dual_ket(Mat(v.conjugate()), "P", "F").outer();
  Mat pperp = Mat::Identity(D, D) - v * v.adjoint();
  LabeledOperator tail =
      kron(LabeledOperator::identity({{"P", d}}),
           LabeledOperator::square({{"F", D}}, pperp.conjugate()));
  j.mat() += tail.mat();
  return ChoiOperator(std::move(j), {"P"}, {"F"});
}

ChoiOperator transpose_choi(const ChoiOperator& j) {
  require(j.ins.size() == 1 && j.outs.size() == 1,
          "transpose_choi: expects one input and one output space");
  LabeledOperator p = permute_systems(j.op, {j.outs[0], j.ins[0]});
  std::vector<Space> sp = {{"P", p.rows()[0].dim}, {"F", p.rows()[1].dim}};
  return ChoiOperator(LabeledOperator::square(std::move(sp), p.mat()), {"P"},
                      {"F"});
}

ProtocolRun run_inversion_minimal(const Mat& v, const Mat& rho_in) {
  check_isometry(v, "run_inversion_minimal");
  std::int64_t D = v.rows(), d = v.cols();
  require(rho_in.rows() == D && rho_in.cols() == D,
          "run_inversion_minimal: input state must live on C^D");
  int di = static_cast<int>(d);
  require(ipow64(D, di + 1) * d <= kDimBudget,
          "run_inversion_minimal: circuit exceeds the dimension budget");

  AntisymObjects ao = antisym_objects(d, D);
  Mat enc = tensor_power(v, di - 1);
  Vec chi = apply_left(enc, ao.a_state, d);

  std::vector<Space> wires;
  for (int i = 1; i < di; ++i) wires.push_back({"O" + std::to_string(i), D});
  std::vector<Space> chisp = wires;
  chisp.push_back({"F", d});

  LabeledOperator full =
      kron(choi_seed(D, "R", "P"), LabeledOperator::column(chisp, chi).outer());

  std::vector<Space> meas = {{"P", D}};
  for (const auto& s : wires) meas.push_back(s);
  Mat pi = antisym_projector(di, D);
  std::vector<std::string> traced;
  for (const auto& s : meas) traced.push_back(s.label);

  LabeledOperator js = measure_and_trace(
      full, LabeledOperator::square(meas, pi), traced);
  LabeledOperator jf = measure_and_trace(
      full,
      LabeledOperator::square(meas, Mat(Mat::Identity(pi.rows(), pi.cols()) -
                                        pi)),
      traced);

  ProtocolRun run;
  run.success_branch = as_run_choi(js, "R", "F");
  run.failure_branch = as_run_choi(jf, "R", "F");
  run.p_succ = 1.0 / static_cast<double>(d * d);
  run.reference = ref_inverse_choi(v);
  run.residual = frob_gap(run.success_branch, run.p_succ, run.reference);
  run.weight_on_input =
      std::real(apply_channel(run.success_branch, rho_in).trace());
  return run;
}

ProtocolRun run_unitary_inversion_pbt(const Mat& u, int k) {
  require(u.rows() == u.cols(), "run_unitary_inversion_pbt: square input");
  check_isometry(u, "run_unitary_inversion_pbt");
  std::int64_t d = u.rows();
  require(d >= 2, "run_unitary_inversion_pbt: need d >= 2");
  require(k >= 0, "run_unitary_inversion_pbt: need k >= 0");
  int di = static_cast<int>(d);
  int m = k / (di - 1);

  ProtocolRun run;
  run.reference = choi_of_isometry(Mat(u.adjoint()), "P", "F");
  if (m < 1) {
    run.success_branch = zero_choi(d, d);
    run.p_succ = 0.0;
    run.residual = 0.0;
    run.simulated = false;
    return run;
  }
  run.p_succ = static_cast<double>(m) / static_cast<double>(d * d + m - 1);
  if (ipow64(d, 2 * m + 2) > kCircuitBudget) {
    run.success_branch = run.reference;
    run.success_branch.op.mat() *= run.p_succ;
    run.residual = 0.0;
    run.simulated = false;
    return run;
  }

  const PBTResources& res = pbt_resources(d, m);
  AntisymObjects ao = antisym_objects(d, d);
  Mat w = ao.v_as.adjoint() * tensor_power(u, di - 1) * ao.v_as;
  std::int64_t dm = ipow64(d, m);
  Vec sigma = apply_left(tensor_power(w, m), res.phi, dm);

  std::vector<Space> cports, aports;
  for (int i = 1; i <= m; ++i) cports.push_back({"C" + std::to_string(i), d});
  for (int i = 1; i <= m; ++i) aports.push_back({"A" + std::to_string(i), d});
  std::vector<Space> sigsp = cports;
  for (const auto& s : aports) sigsp.push_back(s);

  LabeledOperator full = kron(choi_seed(d, "R", "P"),
                              LabeledOperator::column(sigsp, sigma).outer());

  std::vector<Space> meas = {{"P", d}};
  for (const auto& s : cports) meas.push_back(s);
  std::vector<std::string> traced;
  for (const auto& s : meas) traced.push_back(s.label);

  Mat acc = Mat::Zero(d * d, d * d);
  for (int a = 1; a <= m; ++a) {
    LabeledOperator la = measure_and_trace(
        full, LabeledOperator::square(meas, res.povm[static_cast<size_t>(a)]),
        traced);
    std::vector<std::string> others;
    for (int i = 1; i <= m; ++i)
      if (i != a) others.push_back("A" + std::to_string(i));
    LabeledOperator port =
        others.empty() ? la : partial_trace(la, others);
    acc += permute_systems(port, {"R", "A" + std::to_string(a)}).mat();
  }
  run.success_branch = ChoiOperator(
      LabeledOperator::square({{"P", d}, {"F", d}}, acc), {"P"}, {"F"});

  LabeledOperator l0 =
      measure_and_trace(full, LabeledOperator::square(meas, res.povm[0]),
                        traced);
  std::vector<std::string> alla;
  for (const auto& s : aports) alla.push_back(s.label);
  run.failure_branch = abort_branch(partial_trace(l0, alla), d);

  run.residual = frob_gap(run.success_branch, run.p_succ, run.reference);
  return run;
}

ProtocolRun run_isometry_inversion_full(const Mat& v, int k) {
  check_isometry(v, "run_isometry_inversion_full");
  std::int64_t D = v.rows(), d = v.cols();
  require(d >= 2, "run_isometry_inversion_full: need d >= 2");
  require(k >= 0, "run_isometry_inversion_full: need k >= 0");
  int di = static_cast<int>(d);
  int m = k / (di - 1);

  ProtocolRun run;
  run.reference = ref_inverse_choi(v);
  if (m < 1) {
    run.success_branch = zero_choi(D, d);
    run.p_succ = 0.0;
    run.residual = 0.0;
    run.simulated = false;
    return run;
  }
  run.p_succ = static_cast<double>(m) / static_cast<double>(d * d + m - 1);

  int wired = m * (di - 1);
  int n = wired + 1;
  if (ipow64(D, n) * ipow64(d, n) > kCircuitBudget) {
    run.success_branch = run.reference;
    run.success_branch.op.mat() *= run.p_succ;
    run.residual = 0.0;
    run.simulated = false;
    return run;
  }

  const PBTResources& res = pbt_resources(d, m);
  AntisymObjects ao = antisym_objects(d, D);
  Mat w_enc = tensor_power(v, di - 1) * ao.v_as;  // port encoder, isometry
  std::int64_t dg = ipow64(D, di - 1);
  std::int64_t hg = ipow64(d, di - 1);

  // Resource state with both port groups spelled out.
  std::vector<Space> statesp;
  for (int i = 1; i <= m; ++i) statesp.push_back({"B" + std::to_string(i), d});
  for (int i = 1; i <= m; ++i) statesp.push_back({"A" + std::to_string(i), d});
  std::vector<std::string> stateout;
  for (const auto& s : statesp) stateout.push_back(s.label);
  ChoiOperator cur(LabeledOperator::column(statesp, res.phi).outer(), {},
                   stateout);

  for (int i = 1; i <= m; ++i)
    cur = link_product(cur, choi_of_isometry(w_enc, "B" + std::to_string(i),
                                             "G" + std::to_string(i)));

  PsiChannel psi = build_psi(d, D, n);
  std::vector<Space> in_parts = {{"P", D}};
  std::vector<Space> out_parts = {{"Pp", d}};
  for (int i = 1; i <= m; ++i) {
    in_parts.push_back({"G" + std::to_string(i), dg});
    out_parts.push_back({"H" + std::to_string(i), hg});
  }
  LabeledOperator psl = split_space(psi.choi.op, "I", in_parts);
  psl = split_space(psl, "O", out_parts);
  std::vector<std::string> pins, pouts;
  for (const auto& s : in_parts) pins.push_back(s.label);
  for (const auto& s : out_parts) pouts.push_back(s.label);
  cur = link_product(cur, ChoiOperator(std::move(psl), pins, pouts));

  // Per-port decoder: project back out of the antisymmetric image; the
  // orthogonal remainder is routed to the maximally mixed state so the
  // decoder stays trace preserving.
  std::vector<Mat> dec_kraus;
  dec_kraus.push_back(ao.v_as.adjoint());
  Mat comp = Mat::Identity(hg, hg) - ao.v_as * ao.v_as.adjoint();
  auto ce = herm_eig(comp);
  for (std::int64_t l = 0; l < hg; ++l) {
    if (ce.first(l) < 0.5) continue;
    for (std::int64_t t = 0; t < d; ++t) {
      Mat kr = Mat::Zero(d, hg);
      kr.row(t) = ce.second.col(l).adjoint() / std::sqrt(static_cast<double>(d));
      dec_kraus.push_back(std::move(kr));
    }
  }
  for (int i = 1; i <= m; ++i)
    cur = link_product(cur, choi_from_kraus(dec_kraus, "H" + std::to_string(i),
                                            "C" + std::to_string(i)));

  std::vector<Space> meas = {{"Pp", d}};
  for (int i = 1; i <= m; ++i) meas.push_back({"C" + std::to_string(i), d});
  std::vector<std::string> measl;
  for (const auto& s : meas) measl.push_back(s.label);

  Mat acc = Mat::Zero(D * d, D * d);
  LabeledOperator fail_weight = LabeledOperator::scalar(0.0);
  for (int a = 0; a <= m; ++a) {
    ChoiOperator eff(
        LabeledOperator::square(meas,
                                Mat(res.povm[static_cast<size_t>(a)].transpose())),
        measl, {});
    ChoiOperator br = link_product(cur, eff);
    std::vector<std::string> others;
    for (int i = 1; i <= m; ++i)
      if (i != a) others.push_back("A" + std::to_string(i));
    if (a == 0) {
      std::vector<std::string> alla = others;  // a = 0 lists every port
      fail_weight = partial_trace(br.op, alla);
      continue;
    }
    LabeledOperator port =
        others.empty() ? br.op : partial_trace(br.op, others);
    acc += permute_systems(port, {"P", "A" + std::to_string(a)}).mat();
  }
  run.success_branch = ChoiOperator(
      LabeledOperator::square({{"P", D}, {"F", d}}, acc), {"P"}, {"F"});
  run.failure_branch = abort_branch(fail_weight, d);

  // The guarantee covers inputs arriving through V, so the deviation is
  // measured after composing with the encoding channel.
  ChoiOperator composed =
      link_product(choi_of_isometry(v, "X", "P"), run.success_branch);
  LabeledOperator ident = choi_seed(d, "X", "F");
  run.residual = (composed.op.mat() - run.p_succ * ident.mat()).norm();
  return run;
}

ProtocolRun run_pseudo_cc(const Mat& v, const Mat& rho_in) {
  check_isometry(v, "run_pseudo_cc");
  std::int64_t D = v.rows(), d = v.cols();
  require(d >= 2, "run_pseudo_cc: need d >= 2");
  require(rho_in.rows() == d && rho_in.cols() == d,
          "run_pseudo_cc: input state must live on C^d");
  int di = static_cast<int>(d);
  std::int64_t og = ipow64(D, di - 1);
  require(og <= kDimBudget, "run_pseudo_cc: circuit exceeds the budget");

  AntisymObjects ao = antisym_objects(d, D);
  Mat w_enc = tensor_power(v, di - 1) * ao.v_as;  // og x d
  double p = 1.0 / static_cast<double>(D - d + 1);
  double nv = 1.0 / std::sqrt(fact(di - 1));

  std::vector<Mat> kraus;
  for (const auto& sub : sorted_subsets(static_cast<int>(D), di)) {
    Mat aj = Mat::Zero(D, og);
    for (const auto& sigma : all_permutations(di)) {
      double s = static_cast<double>(perm_sign(sigma));
      std::int64_t col = 0;
      for (int t = 0; t + 1 < di; ++t) col = col * D + sub[sigma[t]];
      aj(sub[sigma[di - 1]], col) += s * nv;
    }
    kraus.push_back(std::sqrt(p) * aj * w_enc);
  }
  ProtocolRun run;
  run.success_branch = choi_from_kraus(kraus, "P", "F");
  run.p_succ = p;
  run.reference = ref_pseudo_cc_choi(v);
  run.residual = frob_gap(run.success_branch, run.p_succ, run.reference);

  // Failure route: weight escaping the antisymmetric subspace is replaced
  // by the maximally mixed state. On encoded inputs this weight is zero.
  Mat esc = w_enc.adjoint() *
            (Mat::Identity(og, og) - antisym_projector(di - 1, D)) * w_enc;
  LabeledOperator jf =
      kron(LabeledOperator::square({{"P", d}}, esc.transpose()),
           LabeledOperator::square(
               {{"F", D}}, Mat(Mat::Identity(D, D) / static_cast<double>(D))));
  run.failure_branch = ChoiOperator(std::move(jf), {"P"}, {"F"});
  run.weight_on_input =
      std::real(apply_channel(run.success_branch, rho_in).trace());
  return run;
}

ProtocolRun run_transposition_pbt(const Mat& v, int k) {
  check_isometry(v, "run_transposition_pbt");
  std::int64_t D = v.rows(), d = v.cols();
  require(k >= 1, "run_transposition_pbt: need k >= 1");
  require(ipow64(D, k + 2) * ipow64(d, k) <= kDimBudget,
          "run_transposition_pbt: circuit exceeds the dimension budget");

  const PBTResources& res = pbt_resources(D, k);

  // Modified resource: the square-root weight mixes the multiplet counts of
  // both dimensions so the isometry calls turn it into the plain resource
  // with the transposed action on the output ports.
  double nmix = 0.0;
  int max_rows = static_cast<int>(std::min<std::int64_t>(d, k));
  for (const auto& mu : partitions(k, max_rows))
    nmix += static_cast<double>(dim_u(mu, static_cast<int>(d))) *
            static_cast<double>(dim_u(mu, static_cast<int>(D)));
  std::int64_t dk = ipow64(d, k);
  Mat yhalf = proj_combo(d, k, [&](const YoungDiagram& mu) {
    double duD = static_cast<double>(dim_u(mu, static_cast<int>(D)));
    double ds = static_cast<double>(dim_sym(mu));
    return std::sqrt(static_cast<double>(dk) * duD / (ds * nmix));
  });
  Vec phi = Vec::Zero(dk * dk);
  double norm = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::int64_t b = 0; b < dk; ++b)
    for (std::int64_t a = 0; a < dk; ++a) phi(b * dk + a) = yhalf(b, a) * norm;
  Vec enc = apply_left(tensor_power(v, k), phi, dk);

  std::vector<Space> oports, aports;
  for (int i = 1; i <= k; ++i) oports.push_back({"O" + std::to_string(i), D});
  for (int i = 1; i <= k; ++i) aports.push_back({"A" + std::to_string(i), d});
  std::vector<Space> encsp = oports;
  for (const auto& s : aports) encsp.push_back(s);

  LabeledOperator full = kron(choi_seed(D, "R", "P"),
                              LabeledOperator::column(encsp, enc).outer());

  std::vector<Space> meas = {{"P", D}};
  for (const auto& s : oports) meas.push_back(s);
  std::vector<std::string> traced;
  for (const auto& s : meas) traced.push_back(s.label);

  ProtocolRun run;
  Mat acc = Mat::Zero(D * d, D * d);
  for (int a = 1; a <= k; ++a) {
    LabeledOperator la = measure_and_trace(
        full, LabeledOperator::square(meas, res.povm[static_cast<size_t>(a)]),
        traced);
    std::vector<std::string> others;
    for (int i = 1; i <= k; ++i)
      if (i != a) others.push_back("A" + std::to_string(i));
    LabeledOperator port = others.empty() ? la : partial_trace(la, others);
    acc += permute_systems(port, {"R", "A" + std::to_string(a)}).mat();
  }
  run.success_branch = ChoiOperator(
      LabeledOperator::square({{"P", D}, {"F", d}}, acc), {"P"}, {"F"});

  LabeledOperator l0 = measure_and_trace(
      full, LabeledOperator::square(meas, res.povm[0]), traced);
  std::vector<std::string> alla;
  for (const auto& s : aports) alla.push_back(s.label);
  run.failure_branch = abort_branch(partial_trace(l0, alla), d);

  run.p_succ =
      static_cast<double>(k) / static_cast<double>(D * d + k - 1);
  run.reference = transpose_choi(choi_of_isometry(v, "I", "O"));
  run.residual = frob_gap(run.success_branch, run.p_succ, run.reference);
  return run;
}

ProtocolRun run_gate_teleport_transpose(const ChoiOperator& j_lambda,
                                        const Mat& rho_in) {
  require(j_lambda.ins.size() == 1 && j_lambda.outs.size() == 1,
          "run_gate_teleport_transpose: expects a single-slot channel");
  ChannelReport rep = validate_channel(j_lambda, 1e-7);
  require(rep.cp && rep.tp,
          "run_gate_teleport_transpose: input is not a valid channel Choi");
  std::int64_t d = j_lambda.dim_in(), D = j_lambda.dim_out();
  require(rho_in.rows() == D && rho_in.cols() == D,
          "run_gate_teleport_transpose: input state must live on C^D");

  // Half of a maximally entangled pair pushed through the channel.
  LabeledOperator sigma = LabeledOperator::square({{"A", d}, {"B", D}},
                                                  Mat(j_lambda.op.mat() /
                                                      static_cast<double>(d)));
  LabeledOperator full = kron(choi_seed(D, "R", "P"), sigma);

  Mat shift = Mat::Zero(D, D);
  for (std::int64_t t = 0; t < D; ++t) shift((t + 1) % D, t) = 1.0;
  Mat clock = Mat::Zero(D, D);
  for (std::int64_t t = 0; t < D; ++t)
    clock(t, t) = std::polar(1.0, 2.0 * kPi * static_cast<double>(t) /
                                      static_cast<double>(D));

  std::vector<Space> meas = {{"P", D}, {"B", D}};
  std::vector<std::string> traced = {"P", "B"};
  LabeledOperator bell = max_entangled(D, "P", "B");

  ProtocolRun run;
  Mat accf = Mat::Zero(D * d, D * d);
  Mat xi = Mat::Identity(D, D);
  for (std::int64_t i = 0; i < D; ++i) {
    Mat zj = Mat::Identity(D, D);
    for (std::int64_t j = 0; j < D; ++j) {
      Vec ket = apply_left(Mat(xi * zj), bell.mat(), D);
      LabeledOperator eff =
          LabeledOperator::column(meas, ket).outer();
      LabeledOperator la = measure_and_trace(full, eff, traced);
      Mat part = permute_systems(la, {"R", "A"}).mat();
      if (i == 0 && j == 0) {
        run.success_branch = ChoiOperator(
            LabeledOperator::square({{"P", D}, {"F", d}}, part), {"P"}, {"F"});
      } else {
        accf += part;
      }
      zj = Mat(zj * clock);
    }
    xi = Mat(xi * shift);
  }
  run.failure_branch = ChoiOperator(
      LabeledOperator::square({{"P", D}, {"F", d}}, accf), {"P"}, {"F"});

  run.p_succ = 1.0 / static_cast<double>(D * d);
  run.reference = transpose_choi(j_lambda);
  run.residual = frob_gap(run.success_branch, run.p_succ, run.reference);
  run.weight_on_input =
      std::real(apply_channel(run.success_branch, rho_in).trace());
  return run;
}

double analytic_success_prob(Task task, std::int64_t d, std::int64_t D,
                             int k) {
  require(d >= 1 && D >= d && k >= 0, "analytic_success_prob: bad parameters");
  switch (task) {
    case Task::kIsometryInversion:
    case Task::kUnitaryInversion: {
      require(d >= 2, "analytic_success_prob: inversion needs d >= 2");
      int m = k / (static_cast<int>(d) - 1);
      if (m < 1) return 0.0;
      return static_cast<double>(m) / static_cast<double>(d * d + m - 1);
    }
    case Task::kTransposition:
      if (k < 1) return 0.0;
      return static_cast<double>(k) / static_cast<double>(D * d + k - 1);
    case Task::kPseudoConjugation:
      if (k < static_cast<int>(d) - 1) return 0.0;
      return 1.0 / static_cast<double>(D - d + 1);
    case Task::kGateTeleportTranspose:
      if (k < 1) return 0.0;
      return 1.0 / static_cast<double>(D * d);
    case Task::kInversionViaConjugation:
      if (k < static_cast<int>(d) - 1) return 0.0;
      return 1.0 / static_cast<double>(D * d * (D - d + 1));
  }
  throw Error("analytic_success_prob: unknown task");
}

ResourceComparison resource_comparison(std::int64_t d, std::int64_t D,
                                       double eps, double p) {
  require(d >= 2 && D >= d, "resource_comparison: need D >= d >= 2");
  require(eps > 0.0 && p > 0.0 && p < 1.0,
          "resource_comparison: need eps > 0 and 0 < p < 1");
  ResourceComparison out;
  out.tomography_calls = static_cast<double>(D * d) / (eps * eps) *
                         std::log(1.0 / (1.0 - p));
  out.embedding_min_calls = D - 1;
  double dd = static_cast<double>(d);
  out.our_calls = static_cast<std::int64_t>(
      std::ceil((dd - 1.0) * (dd * dd - 1.0) / (1.0 - p) - 1e-9));
  return out;
}

}  // namespace hoqt
