// Labeled multipartite operators and the tensor primitives everything else
// is built from.
//
// Index convention: a composite index over spaces (s1, s2, ..., sk) is
// i = i1*(d2*...*dk) + i2*(d3*...*dk) + ... + ik, i.e. the LEFTMOST space is
// the most significant digit. kron(a, b) places a's spaces to the left of
// b's, consistent with this convention.
//
// A LabeledOperator is a matrix together with named row and column space
// lists. Column vectors (kets) carry an empty column list. Labels must be
// unique within each side.
#pragma once

#include "hoqt/random.hpp"
#include "hoqt/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hoqt {

struct Space {
  std::string label;
  std::int64_t dim = 0;
  friend bool operator==(const Space& a, const Space& b) {
    return a.label == b.label && a.dim == b.dim;
  }
};

std::int64_t total_dim(const std::vector<Space>& spaces);

class LabeledOperator {
 public:
  LabeledOperator() = default;
  LabeledOperator(std::vector<Space> row_spaces, std::vector<Space> col_spaces,
                  Mat entries);

  // Operator with identical row and column space lists.
  static LabeledOperator square(std::vector<Space> spaces, Mat entries);
  static LabeledOperator identity(std::vector<Space> spaces);
  // Ket: column vector over the given row spaces.
  static LabeledOperator column(std::vector<Space> row_spaces, Vec entries);
  static LabeledOperator scalar(cplx value);

  const std::vector<Space>& rows() const { return rows_; }
  const std::vector<Space>& cols() const { return cols_; }
  const Mat& mat() const { return m_; }
  Mat& mat() { return m_; }

  std::int64_t row_dim() const { return m_.rows(); }
  std::int64_t col_dim() const { return m_.cols(); }

  bool is_ket() const { return cols_.empty() && rows_.size() > 0; }
  // True when row and column space lists coincide (labels and dims, in order).
  bool square_aligned() const;

  LabeledOperator adjoint() const;

  // Relabel spaces on both sides. Labels absent from the map pass through.
  LabeledOperator renamed(const std::map<std::string, std::string>& ren) const;

  // |psi> -> |psi><psi|.
  LabeledOperator outer() const;

  // Position of a label on the row side, -1 when absent.
  int find_row(const std::string& label) const;
  int find_col(const std::string& label) const;

 private:
  std::vector<Space> rows_, cols_;
  Mat m_;
};

// Tensor product; spaces concatenate left to right.
LabeledOperator kron(const LabeledOperator& a, const LabeledOperator& b);

// Reorder tensor factors. `new_order` must be a permutation of the row
// labels. Square-aligned operators are permuted on both sides, kets on the
// row side only; other shapes are rejected.
LabeledOperator permute_systems(const LabeledOperator& a,
                                const std::vector<std::string>& new_order);

// Trace out the named spaces (square-aligned operators only). The result
// keeps the remaining spaces in their original order.
LabeledOperator partial_trace(const LabeledOperator& a,
                              const std::vector<std::string>& traced);

// Transpose the named spaces in place (square-aligned operators only).
LabeledOperator partial_transpose(const LabeledOperator& a,
                                  const std::vector<std::string>& flipped);

// Reinterpret one space as a product of finer spaces without touching the
// entries. The part dimensions must multiply to the original dimension and
// the new labels must keep the label sets unique.
LabeledOperator split_space(const LabeledOperator& a, const std::string& label,
                            const std::vector<Space>& parts);

// Plain k-fold Kronecker power; k = 0 gives the 1 by 1 identity.
Mat tensor_power(const Mat& a, int k);

// Hermitian eigendecomposition. Requires ||H - H^dag||_F <= tol * ||H||_F,
// symmetrizes the input, and returns ascending eigenvalues with matching
// eigenvector columns. Uses LAPACKE zheevd when available, Eigen otherwise.
std::pair<RVec, Mat> herm_eig(const Mat& h, double hermiticity_tol = 1e-10);

// Frobenius distance between V diag(w) V^dag and the symmetrized input; used
// by tests and kept here so both backends share one definition.
double herm_eig_residual(const Mat& h, const RVec& w, const Mat& v);

// Normalized maximally entangled ket (1/sqrt(d)) sum_i |i>_A |i>_B.
LabeledOperator max_entangled(std::int64_t d, const std::string& label_a,
                              const std::string& label_b);

// Unnormalized dual ket |M>> = sum_ij M_ij |j>_in |i>_out for M : in -> out,
// i.e. sum_j |j>_in (M|j>)_out. The input space comes first.
LabeledOperator dual_ket(const Mat& m, const std::string& label_in,
                         const std::string& label_out);

// Haar isometry wrapped as a labeled rectangular operator out <- in.
LabeledOperator haar_isometry_labeled(std::int64_t d, std::int64_t D,
                                      RandomSource& rng,
                                      const std::string& label_in = "I",
                                      const std::string& label_out = "O");

}  // namespace hoqt
