// Exact simulations of universal black-box protocols acting on an unknown
// isometry V: C^d -> C^D, together with the closed-form success
// probabilities they achieve.
//
// Every protocol is simulated by exact branch arithmetic: resource states,
// encoding isometries, POVM elements, and decoder Kraus operators are
// contracted symbolically into a Choi operator per measurement branch.
// Nothing is sampled. A run reports the success branch as an unnormalized
// Choi operator (the branch equals p_succ times the reference map), the
// complementary failure branch so that completeness can be audited, and the
// Frobenius deviation from p_succ times the reference.
//
// The port-based teleportation resources (resource state, square-root
// normalization operator, excluded-port operator, POVM) are built from the
// symmetric-group isotypic decomposition and cached per (dimension, ports).

#pragma once

#include <cstdint>
#include <vector>

#include "hoqt/choi.hpp"
#include "hoqt/tensor.hpp"
#include "hoqt/types.hpp"

namespace hoqt {

// Totally antisymmetric objects over C^d used by the encoding gadgets.
//   a_state: unit vector on (C^d)^{tensor d}, the normalized full
//            antisymmetrizer of |0 1 ... d-1> with sign fixed by
//            eps_{0,1,...,d-1} = +1 and permutation parity.
//   v_as:    d^{d-1} by d isometry sending |k> to the normalized
//            antisymmetrization of the remaining d-1 basis labels; it
//            encodes one qudit into the antisymmetric subspace.
struct AntisymObjects {
  std::int64_t d = 0;
  std::int64_t D = 0;
  Vec a_state;
  Mat v_as;
};

AntisymObjects antisym_objects(std::int64_t d, std::int64_t D);

// Projector onto the totally antisymmetric subspace of (C^dim)^{tensor n}.
// Zero matrix when n > dim (the subspace is empty).
Mat antisym_projector(int n, std::int64_t dim);

// Result of one protocol simulation. The success branch is the Choi
// operator of the completely positive map implemented conditional on
// success, so Tr[branch(rho)] is the success weight on input rho and
// branch = p_succ * reference holds on the protocol's domain (globally for
// all runs except the compressed inversion, whose guarantee covers inputs
// in the image of V; its residual is measured after composing with V).
struct ProtocolRun {
  ChoiOperator success_branch;   // in "P", out "F"
  double p_succ = 0.0;           // analytic branch coefficient
  ChoiOperator reference;        // target map, same labels
  double residual = 0.0;         // Frobenius gap to p_succ * reference
  ChoiOperator failure_branch;   // abort branch; success + failure is TP
  bool simulated = true;         // false when only the formula is reported
  double weight_on_input = -1.0; // measured success weight, state runs only
};

// Port-based teleportation resources for a given local dimension and port
// count m. phi is the resource state on ports B1..Bm tensor output ports
// A1..Am (in that order); povm lives on P tensor B1..Bm with element 0 the
// failure outcome and elements 1..m the port outcomes.
struct PBTResources {
  std::int64_t local_dim = 0;
  int ports = 0;
  Vec phi;
  std::vector<Mat> povm;
  Mat x_op;    // port-symmetric normalization operator on B
  Mat theta;   // excluded-port operator on m-1 systems (1x1 for m = 1)
  double g = 0.0;  // inverse sum of squared multiplet multiplicities
};

// Cached per (local_dim, ports) behind a read-shared map. Throws when
// local_dim^(2m) exceeds the internal dimension budget.
const PBTResources& pbt_resources(std::int64_t local_dim, int ports);

// Choi operator of the inversion target: rho |-> V^dag rho V plus the
// maximally mixed completion on the orthocomplement of Im V. Composing it
// after the channel of V gives the identity on C^d exactly.
ChoiOperator ref_inverse_choi(const Mat& v);

// Choi operator of the conjugation target: rho |-> V* rho V*^dag plus the
// conjugated orthocomplement projector times Tr rho. Its Kraus-transposed
// map composed after the channel of V gives the identity on C^d exactly.
ChoiOperator ref_pseudo_cc_choi(const Mat& v);

// Choi operator of the Kraus-transposed map: K |-> K^T for every Kraus
// operator, which exchanges the roles of the input and output spaces.
ChoiOperator transpose_choi(const ChoiOperator& j);

// One-call inversion protocol: the input state and the encoded
// antisymmetric resource are projected onto the totally antisymmetric
// subspace. Succeeds with probability 1/d^2 on every input.
ProtocolRun run_inversion_minimal(const Mat& v, const Mat& rho_in);

// Port-based unitary inversion with k calls grouped into m = floor(k/(d-1))
// ports; each port conjugates the unknown unitary through the
// antisymmetric gadget. Succeeds with probability m/(d^2+m-1); k < d-1
// yields a zero-probability run.
ProtocolRun run_unitary_inversion_pbt(const Mat& u, int k);

// Full isometry inversion: the unitary inversion circuit with the
// compressor channel inserted between the isometry calls and the decoding
// measurement. The success probability equals the unitary value and is
// independent of D. Circuits beyond the internal dimension budget report
// the closed-form probability with simulated = false.
ProtocolRun run_isometry_inversion_full(const Mat& v, int k);

// Pseudo complex conjugation from d-1 calls: antisymmetric encoding
// followed by the subset decoder. The success branch equals
// 1/(D-d+1) times the conjugation target on every input.
ProtocolRun run_pseudo_cc(const Mat& v, const Mat& rho_in);

// Transposition through port-based teleportation with k calls: the modified
// resource state absorbs the isometry so the measurement teleports the
// input onto a port carrying the transposed action. Succeeds with
// probability k/(Dd+k-1).
ProtocolRun run_transposition_pbt(const Mat& v, int k);

// Gate teleportation of an arbitrary channel Lambda: C^d -> C^D given as a
// Choi operator: Bell measurement of the input against the Lambda half of
// a maximally entangled pair implements the Kraus-transposed map on the
// retained half with branch coefficient 1/(Dd), succeeding on the identity
// Bell outcome. Throws when j_lambda is not a valid channel.
ProtocolRun run_gate_teleport_transpose(const ChoiOperator& j_lambda,
                                        const Mat& rho_in);

enum class Task {
  kIsometryInversion,
  kUnitaryInversion,
  kTransposition,
  kPseudoConjugation,
  kGateTeleportTranspose,
  kInversionViaConjugation,
};

// Closed-form success probability of each protocol family at (d, D, k).
double analytic_success_prob(Task task, std::int64_t d, std::int64_t D,
                             int k);

// Call-count comparison of inversion strategies at accuracy eps and target
// success probability p: process tomography needs on the order of
// D*d*eps^-2*ln(1/(1-p)) calls, inverting a unitary extension cannot
// succeed with fewer than D-1 calls, and the direct protocol reaches p
// with a D-independent call count.
struct ResourceComparison {
  double tomography_calls = 0.0;
  std::int64_t embedding_min_calls = 0;
  std::int64_t our_calls = 0;
};

ResourceComparison resource_comparison(std::int64_t d, std::int64_t D,
                                       double eps, double p);

}  // namespace hoqt
