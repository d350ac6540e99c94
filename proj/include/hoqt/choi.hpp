// Choi-operator calculus: channel representations, the link product, CP/TP
// predicates, and the affine constraint sets cut out by parallel, sequential,
// and general slot-filling networks.
//
// A channel from in to out is represented by the operator
//   J = sum_{ij} |i><j|_in (x) Lambda(|i><j|)_out,
// acting on in (x) out. Composition of channels becomes the link product,
// which contracts the shared labels of two Choi operators.
//
// Network constraint sets are expressed through the trace-and-replace map
// T_X(W) = (1_X / d_X) (x) Tr_X W, an orthogonal projector in the
// Hilbert-Schmidt sense. Every class condition has the shape
//   (1 - T_{Y_1}) ... (1 - T_{Y_m}) T_Z C = 0,
// and the conditions of one class have mutually orthogonal ranges, so the
// projection onto a class's affine set is one subtraction per condition plus
// a trace correction along the identity.
#pragma once

#include "hoqt/random.hpp"
#include "hoqt/tensor.hpp"
#include "hoqt/types.hpp"

#include <Eigen/SparseCore>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hoqt {

struct ChoiOperator {
  LabeledOperator op;              // square aligned over ins + outs
  std::vector<std::string> ins;
  std::vector<std::string> outs;

  ChoiOperator() = default;
  // Validates that ins and outs partition the operator's spaces.
  ChoiOperator(LabeledOperator o, std::vector<std::string> in_labels,
               std::vector<std::string> out_labels);

  std::int64_t dim_in() const;
  std::int64_t dim_out() const;
  ChoiOperator renamed(const std::map<std::string, std::string>& ren) const;
};

// Rank-one Choi operator of an isometry (a D by d matrix with orthonormal
// columns). Trace d, positive semidefinite. Throws when the columns fail to
// be orthonormal beyond 1e-10.
ChoiOperator choi_of_isometry(const Mat& v, const std::string& label_in = "I",
                              const std::string& label_out = "O");

// J = sum_k |K_k>><<K_k| for a common-shape Kraus family.
ChoiOperator choi_from_kraus(const std::vector<Mat>& kraus,
                             const std::string& label_in = "I",
                             const std::string& label_out = "O");

// Evaluate the channel on a state over the joint input (labels in `ins`
// order): Lambda(rho) = Tr_in[(rho^T (x) 1) J].
Mat apply_channel(const ChoiOperator& j, const Mat& rho);

// Link product: contracts the labels common to x and y,
//   y * x = Tr_shared[(1 (x) y)(x^{T_shared} (x) 1)],
// realized as an index reshuffle followed by one matrix product. Commutative
// up to factor reordering; disjoint labels degenerate to the tensor product;
// fully shared labels give a scalar. Throws when a shared label carries
// different dimensions.
ChoiOperator link_product(const ChoiOperator& x, const ChoiOperator& y);

struct ChannelReport {
  bool cp = false;
  bool tp = false;
  double min_eig = 0.0;       // smallest eigenvalue of the Hermitian part
  double tp_residual = 0.0;   // ||Tr_out J - 1_in||_F
  double herm_residual = 0.0; // ||J - J^dag||_F
};
// cp requires Hermiticity within tol and min_eig >= -tol; tp requires
// tp_residual <= tol.
ChannelReport validate_channel(const ChoiOperator& j, double tol);

enum class CombClass { kParallel, kSequential, kGeneral };
std::string comb_class_name(CombClass c);

// Space layout of a slotted network: a global input P, k open slots with
// input and output dimensions, and a global output F. Canonical label order
// is P, I1, O1, ..., Ik, Ok, F.
struct SlotSignature {
  std::int64_t dim_p = 1;
  std::int64_t dim_f = 1;
  std::vector<std::pair<std::int64_t, std::int64_t>> slots;  // (in, out)

  int k() const { return static_cast<int>(slots.size()); }
  std::vector<Space> spaces() const;
  std::int64_t total_dim() const;
  // Required trace of a network operator: d_P times the product of the
  // slot output dimensions.
  double comb_trace() const;
};

// One homogeneous condition (1 - T_{contexts...}) T_replaced C = 0.
struct TraceReplaceCondition {
  std::vector<std::string> replaced;
  std::vector<std::vector<std::string>> contexts;
  std::string name;
};

// Equality row in the uniform normal form Tr(a C) = b with Hermitian a.
struct EqualityRow {
  Eigen::SparseMatrix<cplx> a;
  double b = 0.0;
};

class CombConstraintSet {
 public:
  CombConstraintSet(CombClass cls, SlotSignature sig);

  CombClass comb_class() const { return class_; }
  const SlotSignature& signature() const { return sig_; }
  const std::vector<Space>& spaces() const { return spaces_; }
  double trace_value() const { return trace_; }
  const std::vector<TraceReplaceCondition>& conditions() const {
    return conditions_;
  }

  // Image of one condition's projector; zero iff the condition holds.
  Mat apply_condition(const TraceReplaceCondition& cond, const Mat& c) const;

  // Orthogonal projection onto the affine set (all conditions plus trace).
  Mat project(const Mat& c) const;

  // Frobenius distance from the affine set.
  double residual(const Mat& c) const;

  // Norm of each condition image, with the trace mismatch appended.
  std::vector<double> condition_residuals(const Mat& c) const;

  // Explicit equality rows spanning the same affine set, for consumers that
  // want constraints in Tr(a C) = b form. Sized for small networks; the
  // projection API above is the fast path.
  std::vector<EqualityRow> normal_form() const;

 private:
  CombClass class_;
  SlotSignature sig_;
  std::vector<Space> spaces_;
  double trace_;
  std::vector<TraceReplaceCondition> conditions_;
};

// Constraint set for a class and signature. The general class is available
// for at most three slots.
CombConstraintSet comb_constraints(CombClass cls, const SlotSignature& sig);

// Two-outcome network instrument: a success branch and a failure branch
// whose sum must satisfy the class constraints.
struct Superinstrument {
  ChoiOperator s;
  ChoiOperator f;
  CombClass comb_class = CombClass::kParallel;
  SlotSignature signature;
};

struct SuperinstrumentReport {
  bool pass = false;
  double min_eig_s = 0.0;
  double min_eig_f = 0.0;
  double comb_residual = 0.0;
  std::vector<double> condition_residuals;
};
SuperinstrumentReport validate_superinstrument(const Superinstrument& si,
                                               double tol);

// Random channel: Gaussian Kraus operators renormalized to trace
// preservation. Requires kraus_rank * dim_out >= dim_in.
ChoiOperator random_cptp(std::int64_t dim_in, std::int64_t dim_out,
                         int kraus_rank, RandomSource& rng,
                         const std::string& label_in = "I",
                         const std::string& label_out = "O");

}  // namespace hoqt
