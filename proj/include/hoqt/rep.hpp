// Symmetric-group representation data on (C^d)^{otimes k}.
//
// The k-fold tensor power of C^d splits into blocks indexed by partitions mu
// of k with at most d rows. Each block factors into a unitary-group part of
// dimension dim_u(mu, d) and a symmetric-group part of dimension dim_sym(mu).
// The symmetric-group factor is indexed by standard tableaux in a canonical
// order (lexicographic on row-reading words) that does not depend on d, so a
// tableau index refers to the same basis vector for every local dimension.
// That identification is what lets isometry tensor powers act block by block
// as V_mu tensor identity, with the identity literally the identity matrix
// on tableau indices.
#pragma once

#include "hoqt/tensor.hpp"
#include "hoqt/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hoqt {

// Partition of k: weakly decreasing positive row lengths.
struct YoungDiagram {
  std::vector<int> rows;

  int boxes() const;
  int length() const { return static_cast<int>(rows.size()); }
  bool valid() const;
  std::string str() const;

  friend bool operator==(const YoungDiagram& a, const YoungDiagram& b) {
    return a.rows == b.rows;
  }
  friend bool operator<(const YoungDiagram& a, const YoungDiagram& b) {
    return a.rows < b.rows;
  }
};

// Standard filling of a shape: entries 1..k increase along rows and columns.
struct StandardTableau {
  YoungDiagram shape;
  std::vector<std::vector<int>> cells;

  // Concatenation of the rows, used as the canonical sort key.
  std::vector<int> row_word() const;
};

// One-line permutation: sigma[i] is the image of i, zero based.
using Permutation = std::vector<int>;

// All partitions of k in lexicographically decreasing order, [k] first and
// [1,...,1] last. max_rows > 0 keeps only partitions with at most that many
// rows. Throws on k < 1.
std::vector<YoungDiagram> partitions(int k, int max_rows = 0);

// Number of standard tableaux of shape mu (hook length formula).
std::int64_t dim_sym(const YoungDiagram& mu);

// Dimension of the degree-d unitary-group block of shape mu (hook content
// formula). Zero exactly when mu has more than d rows.
std::int64_t dim_u(const YoungDiagram& mu, int d);

// Irreducible symmetric-group character chi_mu on the class of the given
// cycle type, by the Murnaghan-Nakayama rule. Throws on size mismatch.
std::int64_t character(const YoungDiagram& mu, const YoungDiagram& cycle_type);

// All standard tableaux of shape mu in canonical order.
std::vector<StandardTableau> standard_tableaux(const YoungDiagram& mu);

// The full symmetric group on {0..k-1} in lexicographic one-line order.
std::vector<Permutation> all_permutations(int k);

// (a compose b)(i) = a(b(i)).
Permutation compose(const Permutation& a, const Permutation& b);
Permutation inverse(const Permutation& a);

// Cycle lengths of sigma, sorted decreasingly, as a partition.
YoungDiagram cycle_type(const Permutation& sigma);

// Spaces {prefix1, ..., prefixk}, each of dimension d, for tensor powers.
std::vector<Space> copy_spaces(std::int64_t d, int k,
                               const std::string& prefix = "c");

// Tensor-factor permutation operator: P_sigma sends the product of vectors
// psi_1 ... psi_k to the product with psi_{sigma^{-1}(i)} at position i.
LabeledOperator perm_operator(const Permutation& sigma, std::int64_t d, int k);

// Young's orthogonal representation matrix of sigma for shape mu, real
// orthogonal of size dim_sym(mu), rows and columns in canonical tableau
// order. Built from adjacent transpositions via axial distances.
RMat young_orthogonal(const YoungDiagram& mu, const Permutation& sigma);

// Matrix units E_{st} on (C^d)^{otimes k} for shape mu, indexed by pairs of
// standard tableaux in canonical order. They satisfy E_{st} E_{uv} =
// delta_{tu} E_{sv} and sum_{mu,t} E_{tt} = 1.
struct MatrixUnitSet {
  YoungDiagram shape;
  std::vector<StandardTableau> tableaux;
  // units[s][t] maps the t component onto the s component.
  std::vector<std::vector<Mat>> units;
};
MatrixUnitSet matrix_units(const YoungDiagram& mu, std::int64_t d, int k);

// Projector onto the full mu block of (C^d)^{otimes k}, built from character
// sums. Hermitian idempotent with trace dim_u(mu,d) * dim_sym(mu); the zero
// operator when mu has more than d rows.
LabeledOperator isotypic_projector(const YoungDiagram& mu, std::int64_t d,
                                   int k);

// Isometry W_mu from C^{dim_u} tensor C^{dim_sym} onto the mu block of
// (C^d)^{otimes k}. Row spaces are the k tensor copies; column spaces are
// "u" (unitary-group factor) then "s" (tableau factor). In this basis
// W^dag P_sigma W = 1 tensor rho_mu(sigma) and W^dag U^{otimes k} W =
// U_mu tensor 1. Throws when mu has more than d rows.
LabeledOperator schur_block_isometry(const YoungDiagram& mu, std::int64_t d,
                                     int k);

// Exact average of U^{otimes k} rho U^{dag otimes k} over the unitary group:
// each mu block is replaced by a maximally mixed unitary-group factor times
// the reduced tableau-factor state. No sampling. rho must be square aligned
// with total dimension d^k; labels pass through.
LabeledOperator twirl(const LabeledOperator& rho, std::int64_t d, int k);

// Cached immutable per-(d, k) bundle of block data.
struct SchurBlock {
  YoungDiagram shape;
  std::int64_t du = 0;  // unitary-group factor dimension
  std::int64_t ds = 0;  // tableau factor dimension
  Mat projector;        // sum_t E_{tt}, rank du * ds
  std::vector<std::vector<Mat>> units;
  Mat isometry;         // d^k by du*ds, columns indexed (u, t), u major
};
struct SchurData {
  std::int64_t d = 0;
  int k = 0;
  std::vector<SchurBlock> blocks;  // shapes with at most d rows, canonical order
  const SchurBlock& block(const YoungDiagram& mu) const;
};
// Built once per (d, k) behind a mutex, then shared read-only.
const SchurData& schur_data(std::int64_t d, int k);

// Residual of the block decomposition of V^{otimes k} for an isometry V
// (a D by d matrix): the maximum over shapes of the deviation from
// V_mu tensor identity, the leakage outside the matching block on the
// output side, and the non-isometry of the extracted V_mu. When `blocks`
// is non-null the extracted V_mu are stored there keyed by shape.
double verify_isometry_decomposition(const Mat& v, int k,
                                     std::map<YoungDiagram, Mat>* blocks =
                                         nullptr);

// Both sides of the dimension identity
//   sum_{mu of k} dim_u(mu,d) dim_u(mu,D)
//     = ((dD + k - 1)/k) sum_{alpha of k-1} dim_u(alpha,d) dim_u(alpha,D).
// Returned as (lhs, rhs); agreement is checked by tests. Requires k >= 2.
std::pair<double, double> dim_recursion_check(int d, int D, int k);

}  // namespace hoqt
