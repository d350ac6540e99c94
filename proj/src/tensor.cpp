#include "hoqt/tensor.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#ifdef HOQT_WITH_LAPACKE
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#else
#include <Eigen/Eigenvalues>
#endif

namespace hoqt {

namespace {

void check_labels_unique(const std::vector<Space>& sp, const char* side) {
  std::set<std::string> seen;
  for (const auto& s : sp) {
    require(s.dim >= 1, std::string("space '") + s.label + "' has dim < 1");
    require(seen.insert(s.label).second,
            std::string("duplicate label '") + s.label + "' on " + side);
  }
}

// Strides with the leftmost space most significant.
std::vector<std::int64_t> strides_of(const std::vector<Space>& sp) {
  std::vector<std::int64_t> st(sp.size());
  std::int64_t acc = 1;
  for (int i = static_cast<int>(sp.size()) - 1; i >= 0; --i) {
    st[i] = acc;
    acc *= sp[i].dim;
  }
  return st;
}

std::vector<std::int64_t> digits_of(std::int64_t flat,
                                    const std::vector<Space>& sp,
                                    const std::vector<std::int64_t>& strides) {
  std::vector<std::int64_t> d(sp.size());
  for (size_t i = 0; i < sp.size(); ++i) {
    d[i] = flat / strides[i];
    flat -= d[i] * strides[i];
  }
  return d;
}

}  // namespace

std::int64_t total_dim(const std::vector<Space>& spaces) {
  std::int64_t n = 1;
  for (const auto& s : spaces) n *= s.dim;
  return n;
}

LabeledOperator::LabeledOperator(std::vector<Space> row_spaces,
                                 std::vector<Space> col_spaces, Mat entries)
    : rows_(std::move(row_spaces)), cols_(std::move(col_spaces)),
      m_(std::move(entries)) {
  check_labels_unique(rows_, "rows");
  check_labels_unique(cols_, "cols");
  require(m_.rows() == total_dim(rows_) && m_.cols() == total_dim(cols_),
          "LabeledOperator: matrix shape does not match space dims");
}

LabeledOperator LabeledOperator::square(std::vector<Space> spaces,
                                        Mat entries) {
  auto cols = spaces;
  return LabeledOperator(std::move(spaces), std::move(cols),
                         std::move(entries));
}

LabeledOperator LabeledOperator::identity(std::vector<Space> spaces) {
  std::int64_t n = total_dim(spaces);
  return square(std::move(spaces), Mat::Identity(n, n));
}

LabeledOperator LabeledOperator::column(std::vector<Space> row_spaces,
                                        Vec entries) {
  return LabeledOperator(std::move(row_spaces), {}, Mat(std::move(entries)));
}

LabeledOperator LabeledOperator::scalar(cplx value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return LabeledOperator({}, {}, std::move(m));
}

bool LabeledOperator::square_aligned() const {
  return rows_ == cols_;
}

LabeledOperator LabeledOperator::adjoint() const {
  return LabeledOperator(cols_, rows_, m_.adjoint());
}

LabeledOperator LabeledOperator::renamed(
    const std::map<std::string, std::string>& ren) const {
  auto apply = [&](std::vector<Space> sp) {
    for (auto& s : sp) {
      auto it = ren.find(s.label);
      if (it != ren.end()) s.label = it->second;
    }
    return sp;
  };
  return LabeledOperator(apply(rows_), apply(cols_), m_);
}

LabeledOperator LabeledOperator::outer() const {
  require(is_ket(), "outer: needs a ket");
  return LabeledOperator(rows_, rows_, m_ * m_.adjoint());
}

int LabeledOperator::find_row(const std::string& label) const {
  for (size_t i = 0; i < rows_.size(); ++i)
    if (rows_[i].label == label) return static_cast<int>(i);
  return -1;
}

int LabeledOperator::find_col(const std::string& label) const {
  for (size_t i = 0; i < cols_.size(); ++i)
    if (cols_[i].label == label) return static_cast<int>(i);
  return -1;
}

LabeledOperator kron(const LabeledOperator& a, const LabeledOperator& b) {
  std::vector<Space> rows = a.rows();
  rows.insert(rows.end(), b.rows().begin(), b.rows().end());
  std::vector<Space> cols = a.cols();
  cols.insert(cols.end(), b.cols().begin(), b.cols().end());
  Mat m(a.row_dim() * b.row_dim(), a.col_dim() * b.col_dim());
  for (std::int64_t r = 0; r < a.row_dim(); ++r)
    for (std::int64_t c = 0; c < a.col_dim(); ++c)
      m.block(r * b.row_dim(), c * b.col_dim(), b.row_dim(), b.col_dim()) =
          a.mat()(r, c) * b.mat();
  return LabeledOperator(std::move(rows), std::move(cols), std::move(m));
}

namespace {

// Flat index remap table realizing a reorder of tensor factors.
std::vector<std::int64_t> permutation_table(
    const std::vector<Space>& old_spaces, const std::vector<int>& src_pos) {
  auto old_strides = strides_of(old_spaces);
  std::vector<Space> new_spaces;
  new_spaces.reserve(src_pos.size());
  for (int p : src_pos) new_spaces.push_back(old_spaces[p]);
  auto new_strides = strides_of(new_spaces);
  std::int64_t n = total_dim(old_spaces);
  std::vector<std::int64_t> map(n);
  for (std::int64_t flat = 0; flat < n; ++flat) {
    auto dig = digits_of(flat, old_spaces, old_strides);
    std::int64_t out = 0;
    for (size_t p = 0; p < src_pos.size(); ++p)
      out += dig[src_pos[p]] * new_strides[p];
    map[flat] = out;
  }
  return map;
}

std::vector<int> source_positions(const std::vector<Space>& spaces,
                                  const std::vector<std::string>& order) {
  require(order.size() == spaces.size(),
          "permute_systems: order must mention every label exactly once");
  std::vector<int> pos;
  std::set<std::string> seen;
  for (const auto& lbl : order) {
    require(seen.insert(lbl).second, "permute_systems: repeated label");
    int p = -1;
    for (size_t i = 0; i < spaces.size(); ++i)
      if (spaces[i].label == lbl) p = static_cast<int>(i);
    require(p >= 0, "permute_systems: unknown label '" + lbl + "'");
    pos.push_back(p);
  }
  return pos;
}

}  // namespace

LabeledOperator permute_systems(const LabeledOperator& a,
                                const std::vector<std::string>& new_order) {
  require(a.square_aligned() || a.is_ket(),
          "permute_systems: operator must be square-aligned or a ket");
  auto pos = source_positions(a.rows(), new_order);
  auto map = permutation_table(a.rows(), pos);
  std::vector<Space> new_spaces;
  for (int p : pos) new_spaces.push_back(a.rows()[p]);
  if (a.is_ket()) {
    Vec v(a.row_dim());
    for (std::int64_t r = 0; r < a.row_dim(); ++r) v(map[r]) = a.mat()(r, 0);
    return LabeledOperator::column(std::move(new_spaces), std::move(v));
  }
  Mat m(a.row_dim(), a.col_dim());
  for (std::int64_t c = 0; c < a.col_dim(); ++c)
    for (std::int64_t r = 0; r < a.row_dim(); ++r)
      m(map[r], map[c]) = a.mat()(r, c);
  return LabeledOperator::square(std::move(new_spaces), std::move(m));
}

LabeledOperator partial_trace(const LabeledOperator& a,
                              const std::vector<std::string>& traced) {
  require(a.square_aligned(), "partial_trace: operator must be square-aligned");
  const auto& sp = a.rows();
  std::vector<bool> is_traced(sp.size(), false);
  for (const auto& lbl : traced) {
    int p = a.find_row(lbl);
    require(p >= 0, "partial_trace: unknown label '" + lbl + "'");
    require(!is_traced[p], "partial_trace: repeated label '" + lbl + "'");
    is_traced[p] = true;
  }
  auto strides = strides_of(sp);
  std::vector<Space> kept, tr;
  std::vector<std::int64_t> kept_strides, tr_strides;
  for (size_t i = 0; i < sp.size(); ++i) {
    if (is_traced[i]) {
      tr.push_back(sp[i]);
      tr_strides.push_back(strides[i]);
    } else {
      kept.push_back(sp[i]);
      kept_strides.push_back(strides[i]);
    }
  }
  std::int64_t nk = total_dim(kept), nt = total_dim(tr);

  // Offsets of each kept (resp. traced) multi-index inside the full index.
  auto offsets = [](const std::vector<Space>& spaces,
                    const std::vector<std::int64_t>& full_strides) {
    auto local = strides_of(spaces);
    std::int64_t n = total_dim(spaces);
    std::vector<std::int64_t> off(n, 0);
    for (std::int64_t flat = 0; flat < n; ++flat) {
      std::int64_t rem = flat;
      for (size_t i = 0; i < spaces.size(); ++i) {
        std::int64_t d = rem / local[i];
        rem -= d * local[i];
        off[flat] += d * full_strides[i];
      }
    }
    return off;
  };
  auto kept_off = offsets(kept, kept_strides);
  auto tr_off = offsets(tr, tr_strides);

  Mat out = Mat::Zero(nk, nk);
  for (std::int64_t c = 0; c < nk; ++c)
    for (std::int64_t r = 0; r < nk; ++r) {
      cplx s = 0.0;
      for (std::int64_t t = 0; t < nt; ++t)
        s += a.mat()(kept_off[r] + tr_off[t], kept_off[c] + tr_off[t]);
      out(r, c) = s;
    }
  if (kept.empty())
    return LabeledOperator::scalar(out(0, 0));
  return LabeledOperator::square(std::move(kept), std::move(out));
}

LabeledOperator partial_transpose(const LabeledOperator& a,
                                  const std::vector<std::string>& flipped) {
  require(a.square_aligned(),
          "partial_transpose: operator must be square-aligned");
  const auto& sp = a.rows();
  std::vector<bool> flip(sp.size(), false);
  for (const auto& lbl : flipped) {
    int p = a.find_row(lbl);
    require(p >= 0, "partial_transpose: unknown label '" + lbl + "'");
    flip[p] = true;
  }
  auto strides = strides_of(sp);
  std::int64_t n = a.row_dim();
  // Flipped-part contribution of each flat index.
  std::vector<std::int64_t> fpart(n, 0);
  for (std::int64_t flat = 0; flat < n; ++flat) {
    auto dig = digits_of(flat, sp, strides);
    for (size_t i = 0; i < sp.size(); ++i)
      if (flip[i]) fpart[flat] += dig[i] * strides[i];
  }
  Mat out(n, n);
  for (std::int64_t c = 0; c < n; ++c)
    for (std::int64_t r = 0; r < n; ++r)
      out((r - fpart[r]) + fpart[c], (c - fpart[c]) + fpart[r]) =
          a.mat()(r, c);
  return LabeledOperator::square(sp, std::move(out));
}

LabeledOperator split_space(const LabeledOperator& a, const std::string& label,
                            const std::vector<Space>& parts) {
  require(!parts.empty(), "split needs at least one part");
  std::int64_t prod = 1;
  for (const auto& p : parts) {
    require(p.dim >= 1, "part dimensions must be positive");
    prod *= p.dim;
  }
  auto rebuild = [&](const std::vector<Space>& spaces, bool* found) {
    std::vector<Space> out;
    for (const auto& s : spaces) {
      if (s.label == label) {
        require(s.dim == prod, "part dimensions do not multiply to " + label);
        out.insert(out.end(), parts.begin(), parts.end());
        *found = true;
      } else {
        out.push_back(s);
      }
    }
    return out;
  };
  bool in_rows = false, in_cols = false;
  auto rows = rebuild(a.rows(), &in_rows);
  auto cols = rebuild(a.cols(), &in_cols);
  require(in_rows || in_cols, "no space labeled " + label);
  return LabeledOperator(std::move(rows), std::move(cols), a.mat());
}

Mat tensor_power(const Mat& a, int k) {
  Mat out = Mat::Ones(1, 1);
  for (int i = 0; i < k; ++i) {
    Mat next(out.rows() * a.rows(), out.cols() * a.cols());
    for (std::int64_t r = 0; r < out.rows(); ++r)
      for (std::int64_t c = 0; c < out.cols(); ++c)
        next.block(r * a.rows(), c * a.cols(), a.rows(), a.cols()) =
            out(r, c) * a;
    out = std::move(next);
  }
  return out;
}

std::pair<RVec, Mat> herm_eig(const Mat& h, double hermiticity_tol) {
  require(h.rows() == h.cols(), "herm_eig: matrix must be square");
  double scale = h.norm();
  if (scale > 0.0) {
    double dev = (h - h.adjoint()).norm() / scale;
    require(dev <= hermiticity_tol, "herm_eig: input is not Hermitian");
  }
  Mat sym = 0.5 * (h + h.adjoint());
#ifdef HOQT_WITH_LAPACKE
  std::int64_t n = sym.rows();
  RVec w(n);
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<int>(n),
                            sym.data(), static_cast<int>(n), w.data());
  require(info == 0, "herm_eig: zheevd failed");
  return {std::move(w), std::move(sym)};
#else
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  require(es.info() == Eigen::Success, "herm_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
#endif
}

double herm_eig_residual(const Mat& h, const RVec& w, const Mat& v) {
  Mat sym = 0.5 * (h + h.adjoint());
  return (v * w.asDiagonal() * v.adjoint() - sym).norm();
}

LabeledOperator max_entangled(std::int64_t d, const std::string& label_a,
                              const std::string& label_b) {
  require(d >= 1, "max_entangled: d >= 1");
  Vec v = Vec::Zero(d * d);
  double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::int64_t i = 0; i < d; ++i) v(i * d + i) = a;
  return LabeledOperator::column({{label_a, d}, {label_b, d}}, std::move(v));
}

LabeledOperator dual_ket(const Mat& m, const std::string& label_in,
                         const std::string& label_out) {
  std::int64_t dout = m.rows(), din = m.cols();
  Vec v(din * dout);
  for (std::int64_t j = 0; j < din; ++j)
    for (std::int64_t i = 0; i < dout; ++i) v(j * dout + i) = m(i, j);
  return LabeledOperator::column({{label_in, din}, {label_out, dout}},
                                 std::move(v));
}

LabeledOperator haar_isometry_labeled(std::int64_t d, std::int64_t D,
                                      RandomSource& rng,
                                      const std::string& label_in,
                                      const std::string& label_out) {
  return LabeledOperator({{label_out, D}}, {{label_in, d}},
                         haar_isometry(d, D, rng));
}

}  // namespace hoqt
