#ifndef PHGB_MELLIN_HPP
#define PHGB_MELLIN_HPP

#include <optional>
#include <vector>

#include "phgb/common.hpp"
#include "phgb/series.hpp"

namespace phgb {

/// Matrix polynomial N(z) = sum_m A_m z^m, the Mellin-transformed normal
/// operator family of a b-operator over a finite mode space.
struct MellinFamily {
    int rows = 0, cols = 0;
    std::vector<MatrixXcd> coeffs;  // coeffs[m] multiplies z^m

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    bool square() const { return rows == cols; }
    /// m-th derivative divided by m!, evaluated at z0.
    MatrixXcd taylor_coeff(int m, Cplx z0) const;
};

MatrixXcd evaluate(const MellinFamily& n, Cplx z);

/// Singular part sum_k (z - z0)^{-k-1} u_k of a Mellin-side function.
/// vectors.back() is the leading-order term.
struct LaurentData {
    Cplx z0;
    std::vector<VectorXcd> vectors;

    int depth() const { return static_cast<int>(vectors.size()); }
    const VectorXcd& leading() const { return vectors.back(); }
};

/// Laurent coefficients of N(z) u(z) around u.z0: negative powers
/// (z-z0)^{-depth..-1} followed by Taylor powers 0..taylor_terms-1.
struct LaurentProduct {
    std::vector<VectorXcd> singular;  // singular[j] multiplies (z-z0)^{-j-1}
    std::vector<VectorXcd> taylor;    // taylor[m] multiplies (z-z0)^m
};
LaurentProduct laurent_apply(const MellinFamily& n, const LaurentData& u, int taylor_terms);

/// Terms rho^{i z0} (log rho)^k (i^k / k!) u_k, the residue of rho^{iz} u(z).
std::vector<PhgTerm> residue_of(const LaurentData& u);
/// Inverse: given the physical term coefficients g_k at one exponent, the
/// Laurent vectors are u_k = k! (-i)^k g_k.
LaurentData laurent_from_terms(Cplx s0, const std::vector<VectorXcd>& log_coeffs);

/// Family M with M(conj(z) + i w) = N(z)^H; the Mellin family of the
/// adjoint with respect to a weight-w density.
MellinFamily adjoint_family(const MellinFamily& n, double w);

struct Root {
    Cplx z0;
    int multiplicity = 1;
};

/// All roots of det N(z) with Im z in (im_min, im_max), clustered within
/// cluster_tol, multiplicities summing to the strip total.
std::vector<Root> indicial_roots(const MellinFamily& n, double im_min, double im_max,
                                 double cluster_tol = Tol::root_cluster);

/// Eigenvalues of the block companion linearization (requires invertible
/// leading coefficient); cross-check oracle for indicial_roots.
std::vector<Cplx> companion_eigenvalues(const MellinFamily& n);

/// Chain spaces at z0. chain_basis[j] stacks (u_0,...,u_j) column-wise; a
/// column is a basis vector of the space of Laurent data u with N(z)u(z)
/// holomorphic at z0. lead_basis[j] spans the leading-order space (the u_j
/// components); lead_dims[j] is its dimension.
struct SingularChains {
    Cplx z0;
    int jmax = 0;
    int n = 0;  // mode-space dimension (columns of the family)
    std::vector<MatrixXcd> chain_basis;
    std::vector<MatrixXcd> lead_basis;
    std::vector<int> lead_dims;
    int ord = -1;  // smallest j with lead_dims[j] == 0; -1 if not reached
    bool resolved() const { return ord >= 0; }
    /// dim F_j = sum of lead_dims up to j (chain-space dimension).
    int chain_dim(int j) const { return static_cast<int>(chain_basis[j].cols()); }
};

SingularChains singular_chains(const MellinFamily& n, Cplx z0, int jmax,
                               double rank_tol = Tol::rank_rel);

/// ord(N at z0): smallest J with trivial leading space, resolved by chain
/// stabilization up to jmax. Throws OrderNotResolved when jmax is hit while
/// the chains keep growing and `throw_unresolved` is set.
int chain_order(const MellinFamily& n, Cplx z0, int jmax, bool throw_unresolved = true);

/// Points in the strip Im z in (im_min, im_max) where the family has
/// nontrivial kernel. Square families use det roots; non-square ones use
/// randomized square projections for candidates, each verified by SVD.
std::vector<Root> kernel_points(const MellinFamily& n, double im_min, double im_max);

/// ord(P^*, conj(-i s) + i w) as a queryable function of the exponent s.
/// Construct from the adjoint family; results are memoized.
class OrdFunction {
public:
    OrdFunction(MellinFamily adjoint, double w, int jmax = 6);
    int operator()(Cplx s) const;
    Cplx mellin_point(Cplx s) const;  // conj(-i s) + i w
    const MellinFamily& adjoint() const { return adjoint_; }
    double weight() const { return w_; }
    int jmax() const { return jmax_; }

    /// Exponents s with ord >= 1 and Re s in [re_min, re_max).
    std::vector<Cplx> singular_exponents(double re_min, double re_max) const;

private:
    MellinFamily adjoint_;
    double w_;
    int jmax_;
    mutable std::vector<std::pair<Cplx, int>> cache_;
};

/// One aggregated boundary-spectrum point.
struct SpectrumPoint {
    Cplx z0;                      // Mellin point
    Cplx s;                       // exponent, s = i z0
    int det_multiplicity = 0;     // multiplicity of det at z0 (0 if non-square)
    int ord = 0;
    std::vector<int> quotient_dims;  // dim of the j-th leading space, j < ord
    std::string provenance;          // e.g. "scalar l=1"
};

struct SpectrumReport {
    std::vector<SpectrumPoint> points;
    double im_min = 0.0, im_max = 0.0;  // strip in Im z
};

} // namespace phgb

#endif
