// The block-diagonal compression channel Psi and the exact collective twirl
// channel it reproduces.
//
// Psi maps n systems of dimension D down to n systems of dimension d. On the
// isotypic block of shape mu it discards the unitary-group factor, prepares
// that factor maximally mixed at dimension d, and carries the tableau factor
// across unchanged; blocks whose shapes need more than d rows are replaced by
// the maximally mixed state times their trace. Composed with V^{(x)n} (.)
// V^{dag (x)n} for any isometry V from C^d into C^D, the result is exactly
// the Haar average of U^{(x)n} (.) U^{dag (x)n} over the d-dimensional
// unitary group, independent of V. lemma2_residual measures that identity in
// Choi norm.
#pragma once

#include "hoqt/choi.hpp"
#include "hoqt/rep.hpp"
#include "hoqt/tensor.hpp"
#include "hoqt/types.hpp"

#include <cstdint>

namespace hoqt {

struct PsiChannel {
  std::int64_t d = 0;  // output local dimension
  std::int64_t D = 0;  // input local dimension
  int n = 0;           // number of systems
  ChoiOperator choi;   // input label "I" (dim D^n), output label "O" (dim d^n)
};

// Assemble Psi from its measure-and-prepare Kraus family and verify the
// result is a channel. Requires D >= d >= 1, n >= 1, and D^n <= budget.
PsiChannel build_psi(std::int64_t d, std::int64_t D, int n,
                     std::int64_t budget = 1024);

// Direct block action of Psi on a square-aligned operator of total dimension
// D^n. The result lives on n fresh spaces q1..qn of dimension d.
LabeledOperator apply_psi(const PsiChannel& psi, const LabeledOperator& rho);

// Choi operator of rho -> twirl(rho, d, n), assembled entrywise from the
// exact per-block twirl. Input label "I", output label "O", both d^n.
ChoiOperator twirl_channel_choi(std::int64_t d, int n);

// || Choi(Psi o V^{(x)n} (.) V^{dag (x)n}) - Choi(twirl) ||_F for an isometry
// V from C^d into C^D. Zero (to rounding) for every isometry.
double lemma2_residual(const Mat& v, int n);

}  // namespace hoqt
