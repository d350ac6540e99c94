// Semidefinite programs over quantum-comb variables for black-box isometry
// transformation tasks, together with a projection-splitting solver and
// independent verification of extracted superinstruments.
//
// A task program optimizes the success weight p of a two-branch
// superinstrument (S, F): both branches are PSD, their sum satisfies the
// causal-structure constraints of the chosen comb class, and for every
// isometry V in a sampled spanning set the composed success branch must
// reproduce the target map with weight p. Universality over all isometries
// reduces to finitely many equalities because the constraint is linear in
// the n-fold tensor power of |V>><<V| and those powers are sampled until
// they span.
//
// Equality families are kept in a compressed sandwich form
//     W(V)^dag X W(V) + p * P(V) = R(V)
// where X is one PSD block and the columns of W(V) are Kronecker products
// of per-space factors: conjugated columns of V on contracted slice legs, the
// conjugated dual ket conj(|V>>) on each slot leg, and standard basis
// vectors on kept legs. The solver exploits this structure; one dense
// coefficient matrix per scalar row is never materialized. Small problems
// can also carry explicit rows, which the tests use to cross-check the
// structured path.
#pragma once

#include "hoqt/choi.hpp"
#include "hoqt/random.hpp"
#include "hoqt/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hoqt {

// ---------------------------------------------------------------------------
// Sampled spanning sets of isometry tensor powers.

struct SpanBasisOptions {
  // Consecutive samples that fail to enlarge the span before the set is
  // declared saturated.
  int stable_rejects = 8;
  // Schur complement threshold for accepting a candidate as a new direction
  // (relative to unit-normalized Gram diagonal).
  double accept_tol = 1e-6;
  // Hard cap on accepted vectors; exceeding it is an error because every
  // task here has a finite, moderate span dimension.
  std::int64_t max_rank = 4096;
  // Hard cap on drawn candidates, as a multiple of the ambient dimension
  // (d*D)^(2n) and also at least max_rank * 8.
  std::int64_t candidate_factor = 4;
};

// Haar-sampled isometries V_i : C^d -> C^D whose vectors
// vec((|V_i>><<V_i|)^{tensor n}) span the same space as the full isometry
// family. Inner products of those vectors reduce to |Tr(V_i^dag V_j)|^(2n),
// so saturation is detected from a small Gram matrix without materializing
// any tensor power.
struct IsometrySpanBasis {
  std::int64_t d = 0;
  std::int64_t D = 0;
  int n = 1;
  std::uint64_t seed = 0;
  std::vector<Mat> isometries;
  bool saturated = false;
  // Smallest eigenvalue of the unit-normalized Gram of the accepted set.
  double gram_min_eig = 0.0;

  int rank() const { return static_cast<int>(isometries.size()); }
};

// Samples until saturation. Deterministic for a fixed rng seed. Throws when
// the candidate or rank cap is hit before saturation.
IsometrySpanBasis isometry_span_basis(std::int64_t d, std::int64_t D, int n,
                                      RandomSource& rng,
                                      const SpanBasisOptions& opt = {});

// Unit-normalized Gram matrix g_ij = (Tr(V_i^dag V_j) / d)^n * conj(...)^n
// of the accepted spanning vectors; diagnostics and tests.
Mat span_basis_gram(const IsometrySpanBasis& basis);

// ---------------------------------------------------------------------------
// Problem data.

enum class SdpTask {
  kInversion,
  kPseudoConjugation,
  kConjugation,
  kTransposition,
  kSuccessOrDraw,
};

const char* sdp_task_name(SdpTask task);

struct PsdBlockSpec {
  std::string name;
  std::int64_t dim = 0;
};

// One family of sandwich equalities, sharing the W factors of TaskRows:
//     W_i^dag X_block W_i + p * p_coeff[i] = rhs[i]   for every basis index i.
struct SandwichFamily {
  int block = 0;
  std::vector<Mat> p_coeff;
  std::vector<Mat> rhs;
};

// Structured rows for one task problem. Column (a, x) of w[i] (slice-major,
// a < slice, x < kept) is the Kronecker product over the signature's spaces
// of the per-space factors described in the header comment. u[i] carries the
// contracted-leg factors only (dim_u x slice); Gram blocks of the full rows
// reduce to Q_ij = u_i^dag u_j, which is what the solver's projection uses.
struct TaskRows {
  std::vector<Mat> w;
  std::vector<Mat> u;
  std::int64_t slice = 1;
  std::int64_t kept = 1;
  std::vector<SandwichFamily> families;
};

// Explicit scalar row sum_b Tr(a[b]^dag X_b) + p_coeff * p = rhs. An empty
// a[b] stands for a zero coefficient on that block.
struct GenericRow {
  std::vector<Mat> a;
  cplx p_coeff{0.0, 0.0};
  cplx rhs{0.0, 0.0};
};

struct SdpProblem {
  SdpTask task = SdpTask::kInversion;
  std::int64_t d = 0;
  std::int64_t D = 0;
  int k = 0;
  CombClass comb = CombClass::kParallel;

  std::vector<PsdBlockSpec> blocks;

  // When set, blocks 0 and 1 are the success / failure branches and their
  // sum must satisfy the comb constraints for (comb, signature).
  bool has_comb = false;
  SlotSignature signature;

  // Exactly one of the two row representations is populated.
  bool structured = false;
  TaskRows task_rows;
  std::vector<GenericRow> rows;

  // Carried for verification and serialization of task problems.
  IsometrySpanBasis basis;
};

// Builds the program for a task at the given comb class. The basis must
// match d, D and the task's resource count (k calls for conjugation and
// transposition, k + 1 otherwise, counting the verification probe).
SdpProblem build_task_sdp(SdpTask task, std::int64_t d, std::int64_t D, int k,
                          CombClass comb, const IsometrySpanBasis& basis);

// Generic problem without comb structure (toy instances, cross-checks).
SdpProblem make_generic_sdp(std::vector<PsdBlockSpec> blocks,
                            std::vector<GenericRow> rows);

// Expands structured rows into explicit scalar rows, one per basis index and
// sandwich entry. Intended for small problems; the count is
// basis.rank() * (slice * kept)^2 per family.
std::vector<GenericRow> expand_rows(const SdpProblem& prob);

// Multiplies every equality by `factor` (structured rows scale W by
// sqrt(factor)); the feasible set and optimum are unchanged.
SdpProblem scale_equalities(SdpProblem prob, double factor);

// Ground truth for one task equality, evaluated through link products only:
// the composed success (or failure) branch Choi operator for resource V,
// reindexed to the (slice, kept) order of the sandwich form. `block` selects
// the branch by PSD block index. This path shares no code with the sandwich
// assembly, so agreement between the two is a real consistency check and is
// what fresh-resource verification uses.
Mat task_constraint_lhs(const SdpProblem& prob, const Mat& v,
                        const Mat& block_value, int block);

// Required value p * B(V) (or (1 - p) * B(V) for the draw branch) of the
// same equality at success weight p.
Mat task_constraint_target(const SdpProblem& prob, const Mat& v, int block,
                           double p);

// ---------------------------------------------------------------------------
// Solver.

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 200000;
  // Initial penalty weight. Grows during the run: from residual balance, and
  // in stages of 8 whenever the residuals pass `tol`, which shrinks the
  // objective-induced offset of the consensus point.
  double rho = 20.0;
  // The run stops once a penalty stage moves the objective by less than this.
  double p_tol = 2e-5;
  double over_relax = 1.6;
  int check_every = 25;
  // Wall-clock budget in seconds; 0 disables the limit.
  double time_limit_s = 0.0;
  // Recorded in reports. The solve itself is deterministic and draws no
  // randomness.
  std::uint64_t seed = 0;
  // Optional warm start; sized like the block list plus the scalar p.
  // Keep warm_p above the expected optimum: the solver descends onto the
  // optimum, and a start below it can read as a converged feasible point.
  std::vector<Mat> warm_blocks;
  double warm_p = 0.0;
  bool warm = false;
  // Prints iterate, objective, and residuals to stderr at every check.
  bool verbose = false;
};

struct SdpSolution {
  double p = 0.0;
  std::vector<Mat> block_values;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // Disagreement between the consensus copies at the reported point.
  double consensus_gap = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool converged = false;
  std::string status;
};

SdpSolution solve_sdp(const SdpProblem& prob, const SolveOptions& opt = {});

// Convenience overload; the rng only stamps the report seed, the solve
// itself is deterministic.
SdpSolution solve_sdp(const SdpProblem& prob, double tol, int max_iter,
                      RandomSource& rng);

// ---------------------------------------------------------------------------
// Extraction and verification.

// Wraps the solved blocks as a two-branch superinstrument on the problem's
// signature. Requires a structured task problem.
Superinstrument extract_superinstrument(const SdpProblem& prob,
                                        const SdpSolution& sol);

struct ExtractionReport {
  bool pass = false;
  // Largest equality residual over freshly drawn isometries, evaluated via
  // link products against the solved p.
  double max_fresh_residual = 0.0;
  double comb_residual = 0.0;
  double min_eig_s = 0.0;
  double min_eig_f = 0.0;
  std::string message;
};

// Re-checks the solution against isometries that were not part of the
// problem: validates the superinstrument (PSD branches, comb membership)
// and the task equalities on `fresh_count` new Haar draws. A basis that
// stopped sampling too early fails here and the message flags suspect
// basis non-saturation.
ExtractionReport extract_and_verify(const SdpProblem& prob,
                                    const SdpSolution& sol, RandomSource& rng,
                                    double tol = 1e-5, int fresh_count = 10);

// ---------------------------------------------------------------------------
// Utilities.

// Real embedding [[Re, -Im], [Im, Re]]. Hermitian inputs map to symmetric
// outputs with every eigenvalue doubled in multiplicity.
RMat realify(const Mat& h);

// JSON round-trip. Task problems serialize their metadata and basis and are
// rebuilt deterministically on read; generic problems serialize rows as
// sparse coordinate triplets. Solutions serialize dense blocks as base64
// little-endian doubles.
std::string problem_to_json(const SdpProblem& prob);
SdpProblem problem_from_json(const std::string& text);
std::string solution_to_json(const SdpSolution& sol);

}  // namespace hoqt
