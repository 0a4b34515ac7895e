#ifndef PHGB_FORMAL_HPP
#define PHGB_FORMAL_HPP

#include <map>
#include <string>
#include <vector>

#include "phgb/boperator.hpp"
#include "phgb/common.hpp"
#include "phgb/normal_solver.hpp"
#include "phgb/series.hpp"

namespace phgb {

enum class SolveRoute { Direct, PPStar, Kernel };

/// Per-exponent diagnostics of one solve.
struct ExponentDiagnostic {
    Cplx s;
    int ord = 0;          // adjoint order met at this exponent
    int logs_added = 0;   // extra log powers introduced by the solve here
    double cokernel_pairing = 0.0;  // |pairing| of the rhs group with the cokernel
};

struct SolveReport {
    PhgExpansion solution;
    IndexSet predicted;
    IndexSet realized;
    PhgExpansion residual;  // P u - f, terms at or above the target only
    SolveRoute route = SolveRoute::Direct;
    double target_order = 0.0;
    std::vector<ExponentDiagnostic> diagnostics;
    /// For the PP* route: the sharp-route realized set on the same data.
    std::vector<IndexEntry> comparison_realized;
};

/// Term-by-term formal solve of P u = f below the target order: repeatedly
/// take the lowest remaining rhs exponent group, solve the normal operator
/// there, subtract P applied to the new terms. Throws NotSolvable with the
/// offending exponent and TaylorDepthExceeded when P cannot certify the gap.
SolveReport formal_solve(const BOperator& p, const PhgExpansion& f, double target_order);

/// Sharp-asymptotics solve: formal_solve plus canonical kernel insertions at
/// every surjective-spectrum point with Re s >= alpha0, where alpha0 is
/// computed from alpha_coker and the spectrum. Pairings against cokernel
/// elements at levels below alpha_coker are declared zero (no insertion);
/// levels at or above it are modeled as generically nonzero (unit
/// functional, minimal-norm representative). Realized terms outside the
/// prediction raise PredictionViolated.
SolveReport sharp_solve(const BOperator& p, const PhgExpansion& f, double alpha_coker,
                        double target_order);

/// Upper bound of the largest interval starting at alpha_coker that is
/// disjoint from the real parts of the surjective spectrum; +infinity when
/// the spectrum has nothing at or above alpha_coker.
double alpha0_from_spectrum(const BOperator& p, double alpha_coker, double search_max);

/// Comparison route through the elliptic operator
/// T_alpha = (rho^-a P rho^a)(rho^-a P rho^a)^*: solve T_alpha v = rho^-a f
/// with the same pairing model, return u = rho^{2a} P^* rho^{-a} v. The
/// report carries the sharp route's realized set side by side.
SolveReport ppstar_formal_solve(const BOperator& p, double alpha, const PhgExpansion& f,
                                double alpha_coker, double target_order);

/// Formal kernel element with leading term rho^{s0} (log rho)^k: a singular
/// chain of depth k at z0 = -i s0 (possible for underdetermined families,
/// which have chains of every depth), corrected by formal_solve so that
/// P u has no terms below the target. Throws NotUnderdetermined when the
/// chains stabilize before depth k.
SolveReport kernel_element(const BOperator& p, Cplx s0, int k, double target_order);

} // namespace phgb

#endif
