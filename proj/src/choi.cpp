#include "hoqt/choi.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

namespace hoqt {
namespace {

std::vector<std::string> labels_of(const std::vector<Space>& spaces) {
  std::vector<std::string> out;
  for (const auto& s : spaces) out.push_back(s.label);
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::int64_t dim_of(const std::vector<Space>& spaces, const std::string& l) {
  for (const auto& s : spaces)
    if (s.label == l) return s.dim;
  fail("no space labeled " + l);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

ChoiOperator::ChoiOperator(LabeledOperator o, std::vector<std::string> in_labels,
                           std::vector<std::string> out_labels)
    : op(std::move(o)), ins(std::move(in_labels)), outs(std::move(out_labels)) {
  require(op.square_aligned(), "Choi operator must be square aligned");
  std::set<std::string> seen;
  for (const auto& l : ins)
    require(seen.insert(l).second, "duplicate Choi label " + l);
  for (const auto& l : outs)
    require(seen.insert(l).second, "duplicate Choi label " + l);
  require(seen.size() == op.rows().size(),
          "in/out labels must partition the operator's spaces");
  for (const auto& s : op.rows())
    require(seen.count(s.label) == 1,
            "space " + s.label + " missing from the in/out designation");
}

std::int64_t ChoiOperator::dim_in() const {
  std::int64_t d = 1;
  for (const auto& l : ins) d *= dim_of(op.rows(), l);
  return d;
}

std::int64_t ChoiOperator::dim_out() const {
  std::int64_t d = 1;
  for (const auto& l : outs) d *= dim_of(op.rows(), l);
  return d;
}

ChoiOperator ChoiOperator::renamed(
    const std::map<std::string, std::string>& ren) const {
  auto rename_list = [&](std::vector<std::string> ls) {
    for (auto& l : ls) {
      auto it = ren.find(l);
      if (it != ren.end()) l = it->second;
    }
    return ls;
  };
  return ChoiOperator(op.renamed(ren), rename_list(ins), rename_list(outs));
}

ChoiOperator choi_of_isometry(const Mat& v, const std::string& label_in,
                              const std::string& label_out) {
  std::int64_t d = v.cols();
  require((v.adjoint() * v - Mat::Identity(d, d)).norm() <= 1e-10,
          "columns are not orthonormal");
  auto ket = dual_ket(v, label_in, label_out);
  return ChoiOperator(ket.outer(), {label_in}, {label_out});
}

ChoiOperator choi_from_kraus(const std::vector<Mat>& kraus,
                             const std::string& label_in,
                             const std::string& label_out) {
  require(!kraus.empty(), "empty Kraus family");
  for (const auto& k : kraus)
    require(k.rows() == kraus[0].rows() && k.cols() == kraus[0].cols(),
            "Kraus operators must share one shape");
  // Stack the dual kets as columns so the sum of outer products becomes one
  // matrix product.
  auto first = dual_ket(kraus[0], label_in, label_out);
  Mat duals(first.row_dim(), static_cast<std::int64_t>(kraus.size()));
  duals.col(0) = first.mat();
  for (size_t i = 1; i < kraus.size(); ++i)
    duals.col(static_cast<std::int64_t>(i)) =
        dual_ket(kraus[i], label_in, label_out).mat();
  Mat acc = duals * duals.adjoint();
  return ChoiOperator(LabeledOperator(first.rows(), first.rows(), std::move(acc)),
                      {label_in}, {label_out});
}

Mat apply_channel(const ChoiOperator& j, const Mat& rho) {
  std::vector<std::string> order = j.ins;
  order.insert(order.end(), j.outs.begin(), j.outs.end());
  auto jp = permute_systems(j.op, order);
  std::int64_t din = j.dim_in(), dout = j.dim_out();
  require(rho.rows() == din && rho.cols() == din,
          "state dimension does not match the channel input");
  Mat out = Mat::Zero(dout, dout);
  const Mat& m = jp.mat();
  for (std::int64_t i = 0; i < din; ++i)
    for (std::int64_t i2 = 0; i2 < din; ++i2) {
      cplx w = rho(i, i2);
      if (w == cplx(0.0)) continue;
      out += w * m.block(i * dout, i2 * dout, dout, dout);
    }
  return out;
}

ChoiOperator link_product(const ChoiOperator& x, const ChoiOperator& y) {
  auto xl = labels_of(x.op.rows());
  auto yl = labels_of(y.op.rows());
  std::vector<std::string> shared, x_keep, y_keep;
  for (const auto& l : xl) {
    if (contains(yl, l)) {
      require(dim_of(x.op.rows(), l) == dim_of(y.op.rows(), l),
              "shared label " + l + " carries different dimensions");
      shared.push_back(l);
    } else {
      x_keep.push_back(l);
    }
  }
  for (const auto& l : yl)
    if (!contains(xl, l)) y_keep.push_back(l);

  std::vector<std::string> xorder = x_keep;
  xorder.insert(xorder.end(), shared.begin(), shared.end());
  std::vector<std::string> yorder = shared;
  yorder.insert(yorder.end(), y_keep.begin(), y_keep.end());
  auto xp = permute_systems(x.op, xorder);
  auto yp = permute_systems(y.op, yorder);

  std::int64_t ns = 1;
  for (const auto& l : shared) ns *= dim_of(x.op.rows(), l);
  std::int64_t na = xp.row_dim() / ns;
  std::int64_t nb = yp.row_dim() / ns;

  // result[(a,b),(a',b')] = sum_{s,s2} X[(a,s),(a',s2)] Y[(s,b),(s2,b')],
  // evaluated as one (na^2 x ns^2) by (ns^2 x nb^2) product.
  Mat xr(na * na, ns * ns);
  const Mat& xm = xp.mat();
  for (std::int64_t a = 0; a < na; ++a)
    for (std::int64_t a2 = 0; a2 < na; ++a2)
      for (std::int64_t s = 0; s < ns; ++s)
        for (std::int64_t s2 = 0; s2 < ns; ++s2)
          xr(a * na + a2, s * ns + s2) = xm(a * ns + s, a2 * ns + s2);
  Mat yr(ns * ns, nb * nb);
  const Mat& ym = yp.mat();
  for (std::int64_t s = 0; s < ns; ++s)
    for (std::int64_t s2 = 0; s2 < ns; ++s2)
      for (std::int64_t b = 0; b < nb; ++b)
        for (std::int64_t b2 = 0; b2 < nb; ++b2)
          yr(s * ns + s2, b * nb + b2) = ym(s * nb + b, s2 * nb + b2);
  Mat r2 = xr * yr;
  Mat out(na * nb, na * nb);
  for (std::int64_t a = 0; a < na; ++a)
    for (std::int64_t a2 = 0; a2 < na; ++a2)
      for (std::int64_t b = 0; b < nb; ++b)
        for (std::int64_t b2 = 0; b2 < nb; ++b2)
          out(a * nb + b, a2 * nb + b2) = r2(a * na + a2, b * nb + b2);

  std::vector<Space> spaces;
  for (const auto& l : x_keep) spaces.push_back({l, dim_of(x.op.rows(), l)});
  for (const auto& l : y_keep) spaces.push_back({l, dim_of(y.op.rows(), l)});

  auto keep_roles = [&](const std::vector<std::string>& roles) {
    std::vector<std::string> kept;
    for (const auto& l : roles)
      if (!contains(shared, l)) kept.push_back(l);
    return kept;
  };
  std::vector<std::string> ins = keep_roles(x.ins);
  for (const auto& l : keep_roles(y.ins)) ins.push_back(l);
  std::vector<std::string> outs = keep_roles(x.outs);
  for (const auto& l : keep_roles(y.outs)) outs.push_back(l);

  if (spaces.empty())
    return ChoiOperator(LabeledOperator::scalar(out(0, 0)), {}, {});
  return ChoiOperator(LabeledOperator::square(std::move(spaces), std::move(out)),
                      std::move(ins), std::move(outs));
}

ChannelReport validate_channel(const ChoiOperator& j, double tol) {
  ChannelReport rep;
  const Mat& m = j.op.mat();
  rep.herm_residual = (m - m.adjoint()).norm();
  Mat h = 0.5 * (m + m.adjoint());
  auto eig = herm_eig(h, 1.0);
  rep.min_eig = eig.first.size() ? eig.first(0) : 0.0;
  rep.cp = rep.herm_residual <= tol && rep.min_eig >= -tol;

  auto red = partial_trace(j.op, j.outs);
  std::int64_t din = j.dim_in();
  rep.tp_residual = (red.mat() - Mat::Identity(din, din)).norm();
  rep.tp = rep.tp_residual <= tol;
  return rep;
}

std::string comb_class_name(CombClass c) {
  switch (c) {
    case CombClass::kParallel: return "parallel";
    case CombClass::kSequential: return "sequential";
    case CombClass::kGeneral: return "general";
  }
  fail("unknown class");
}

std::vector<Space> SlotSignature::spaces() const {
  std::vector<Space> out;
  out.push_back({"P", dim_p});
  for (size_t i = 0; i < slots.size(); ++i) {
    out.push_back({"I" + std::to_string(i + 1), slots[i].first});
    out.push_back({"O" + std::to_string(i + 1), slots[i].second});
  }
  out.push_back({"F", dim_f});
  return out;
}

std::int64_t SlotSignature::total_dim() const {
  std::int64_t d = dim_p * dim_f;
  for (const auto& s : slots) d *= s.first * s.second;
  return d;
}

double SlotSignature::comb_trace() const {
  double t = static_cast<double>(dim_p);
  for (const auto& s : slots) t *= static_cast<double>(s.second);
  return t;
}

CombConstraintSet::CombConstraintSet(CombClass cls, SlotSignature sig)
    : class_(cls), sig_(std::move(sig)) {
  require(sig_.dim_p >= 1 && sig_.dim_f >= 1, "dimensions must be positive");
  for (const auto& s : sig_.slots)
    require(s.first >= 1 && s.second >= 1, "dimensions must be positive");
  int k = sig_.k();
  require(k >= 1, "need at least one slot");
  spaces_ = sig_.spaces();
  trace_ = sig_.comb_trace();

  auto in_label = [](int i) { return "I" + std::to_string(i + 1); };
  auto out_label = [](int i) { return "O" + std::to_string(i + 1); };
  auto named = [&](const std::vector<std::string>& replaced,
                   const std::vector<std::vector<std::string>>& contexts) {
    std::ostringstream os;
    for (const auto& ctx : contexts) os << "(1-T[" << join(ctx) << "])";
    os << "T[" << join(replaced) << "]";
    TraceReplaceCondition cond{replaced, contexts, os.str()};
    conditions_.push_back(std::move(cond));
  };

  if (cls == CombClass::kParallel) {
    std::vector<std::string> all_out, all_io_f;
    for (int i = 0; i < k; ++i) all_out.push_back(out_label(i));
    for (int i = 0; i < k; ++i) {
      all_io_f.push_back(in_label(i));
      all_io_f.push_back(out_label(i));
    }
    all_io_f.push_back("F");
    named({"F"}, {all_out});
    named(all_io_f, {{"P"}});
  } else if (cls == CombClass::kSequential) {
    // Teeth from the back: the tail spaces are replaceable given the output
    // of the previous slot, ending at the global input.
    for (int j = k; j >= 0; --j) {
      std::vector<std::string> tail;
      for (int i = j; i < k; ++i) {
        tail.push_back(in_label(i));
        tail.push_back(out_label(i));
      }
      tail.push_back("F");
      std::string prev = (j == 0) ? "P" : out_label(j - 1);
      named(tail, {{prev}});
    }
  } else {
    require(k <= 3, "general class supported for at most three slots");
    // One condition per proper subset R of slots: with the R slots and F
    // replaced, the remaining slot outputs must be untouched marginals.
    for (int mask = 0; mask < (1 << k) - 1; ++mask) {
      std::vector<std::string> replaced;
      std::vector<std::vector<std::string>> contexts;
      for (int i = 0; i < k; ++i) {
        if (mask & (1 << i)) {
          replaced.push_back(in_label(i));
          replaced.push_back(out_label(i));
        } else {
          contexts.push_back({out_label(i)});
        }
      }
      replaced.push_back("F");
      named(replaced, contexts);
    }
    std::vector<std::string> all_io_f;
    for (int i = 0; i < k; ++i) {
      all_io_f.push_back(in_label(i));
      all_io_f.push_back(out_label(i));
    }
    all_io_f.push_back("F");
    named(all_io_f, {{"P"}});
  }
}

namespace {

// T_X: trace out the named subsystems and substitute maximally mixed ones,
// returning to the canonical space order.
Mat trace_replace(const Mat& c, const std::vector<Space>& spaces,
                  const std::vector<std::string>& which) {
  auto w = LabeledOperator::square(spaces, c);
  auto reduced = partial_trace(w, which);
  std::vector<Space> replaced;
  std::int64_t dx = 1;
  for (const auto& l : which) {
    replaced.push_back({l, dim_of(spaces, l)});
    dx *= replaced.back().dim;
  }
  auto back = kron(reduced, LabeledOperator::identity(replaced));
  auto ordered = permute_systems(back, labels_of(spaces));
  return ordered.mat() / static_cast<double>(dx);
}

}  // namespace

Mat CombConstraintSet::apply_condition(const TraceReplaceCondition& cond,
                                       const Mat& c) const {
  Mat m = trace_replace(c, spaces_, cond.replaced);
  for (const auto& ctx : cond.contexts) m -= trace_replace(m, spaces_, ctx);
  return m;
}

Mat CombConstraintSet::project(const Mat& c) const {
  std::int64_t n = total_dim(spaces_);
  require(c.rows() == n && c.cols() == n, "operator does not fit the network");
  // The condition projectors have mutually orthogonal ranges, so projecting
  // onto the intersection of their kernels is one subtraction each.
  Mat out = c;
  for (const auto& cond : conditions_) out -= apply_condition(cond, c);
  cplx tr = out.trace();
  out += ((trace_ - tr) / static_cast<double>(n)) * Mat::Identity(n, n);
  return out;
}

double CombConstraintSet::residual(const Mat& c) const {
  return (c - project(c)).norm();
}

std::vector<double> CombConstraintSet::condition_residuals(const Mat& c) const {
  std::vector<double> out;
  for (const auto& cond : conditions_)
    out.push_back(apply_condition(cond, c).norm());
  out.push_back(std::abs(c.trace() - cplx(trace_)));
  return out;
}

std::vector<EqualityRow> CombConstraintSet::normal_form() const {
  std::vector<EqualityRow> rows;
  std::int64_t n = total_dim(spaces_);
  for (const auto& cond : conditions_) {
    // Candidates spanning the condition's range: the replaced subsystems
    // maximally mixed, a Hermitian basis on the rest.
    std::vector<Space> rest;
    for (const auto& s : spaces_)
      if (!contains(cond.replaced, s.label)) rest.push_back(s);
    std::vector<Space> replaced;
    std::int64_t dz = 1;
    for (const auto& l : cond.replaced) {
      replaced.push_back({l, dim_of(spaces_, l)});
      dz *= replaced.back().dim;
    }
    std::int64_t dw = total_dim(rest);
    auto emit = [&](const Mat& h) {
      auto lifted = kron(LabeledOperator::square(rest, h),
                         LabeledOperator::identity(replaced));
      Mat x = permute_systems(lifted, labels_of(spaces_)).mat() /
              static_cast<double>(dz);
      Mat a = apply_condition(cond, x);
      if (a.norm() <= 1e-12) return;
      EqualityRow row;
      row.a = a.sparseView(1.0, 1e-14);
      row.b = 0.0;
      rows.push_back(std::move(row));
    };
    for (std::int64_t r = 0; r < dw; ++r)
      for (std::int64_t c = r; c < dw; ++c) {
        Mat h = Mat::Zero(dw, dw);
        if (r == c) {
          h(r, c) = 1.0;
          emit(h);
        } else {
          h(r, c) = 1.0;
          h(c, r) = 1.0;
          emit(h);
          h(r, c) = cplx(0.0, 1.0);
          h(c, r) = cplx(0.0, -1.0);
          emit(h);
        }
      }
  }
  EqualityRow trace_row;
  Mat eye = Mat::Identity(n, n);
  trace_row.a = eye.sparseView(1.0, 1e-14);
  trace_row.b = trace_;
  rows.push_back(std::move(trace_row));
  return rows;
}

CombConstraintSet comb_constraints(CombClass cls, const SlotSignature& sig) {
  return CombConstraintSet(cls, sig);
}

SuperinstrumentReport validate_superinstrument(const Superinstrument& si,
                                               double tol) {
  SuperinstrumentReport rep;
  auto set = comb_constraints(si.comb_class, si.signature);
  auto order = labels_of(set.spaces());
  auto sp = permute_systems(si.s.op, order);
  auto fp = permute_systems(si.f.op, order);

  auto min_eig_of = [](const Mat& m) {
    Mat h = 0.5 * (m + m.adjoint());
    auto eig = herm_eig(h, 1.0);
    return eig.first(0);
  };
  rep.min_eig_s = min_eig_of(sp.mat());
  rep.min_eig_f = min_eig_of(fp.mat());

  Mat c = sp.mat() + fp.mat();
  rep.comb_residual = set.residual(c);
  rep.condition_residuals = set.condition_residuals(c);

  double herm = std::max((sp.mat() - sp.mat().adjoint()).norm(),
                         (fp.mat() - fp.mat().adjoint()).norm());
  rep.pass = rep.min_eig_s >= -tol && rep.min_eig_f >= -tol &&
             rep.comb_residual <= tol && herm <= tol;
  return rep;
}

ChoiOperator random_cptp(std::int64_t dim_in, std::int64_t dim_out,
                         int kraus_rank, RandomSource& rng,
                         const std::string& label_in,
                         const std::string& label_out) {
  require(kraus_rank >= 1, "need at least one Kraus operator");
  require(kraus_rank * dim_out >= dim_in,
          "rank too small for a trace-preserving channel");
  std::vector<Mat> ks;
  for (int r = 0; r < kraus_rank; ++r)
    ks.push_back(gaussian_matrix(dim_out, dim_in, rng));
  Mat m = Mat::Zero(dim_in, dim_in);
  for (const auto& k : ks) m += k.adjoint() * k;
  auto eig = herm_eig(m);
  require(eig.first(0) > 1e-12, "degenerate Kraus draw");
  Mat scale = Mat::Zero(dim_in, dim_in);
  for (std::int64_t i = 0; i < dim_in; ++i)
    scale(i, i) = 1.0 / std::sqrt(eig.first(i));
  Mat minvhalf = eig.second * scale * eig.second.adjoint();
  for (auto& k : ks) k = k * minvhalf;
  return choi_from_kraus(ks, label_in, label_out);
}

}  // namespace hoqt
