#ifndef PHGB_NORMAL_SOLVER_HPP
#define PHGB_NORMAL_SOLVER_HPP

#include <optional>

#include "phgb/common.hpp"
#include "phgb/mellin.hpp"

namespace phgb {

/// Everything needed to solve N(z) u(z) = f(z) at one Mellin point: chain
/// spaces for the family at z0 and for its weight-w adjoint at conj(z0)+iw,
/// with J = ord of the adjoint there. Immutable after construction; safe to
/// share across solves at the same exponent.
class PairingContext {
public:
    PairingContext(const MellinFamily& n, double w, Cplx z0, int jmax = 6);

    const MellinFamily& family() const { return n_; }
    const MellinFamily& adjoint() const { return adj_; }
    double weight() const { return w_; }
    Cplx z0() const { return z0_; }
    Cplx zeta0() const { return zeta0_; }
    int order() const { return J_; }
    const SingularChains& chains() const { return chains_; }
    const SingularChains& adjoint_chains() const { return adj_chains_; }

    /// Orthonormal basis of a complement of the (j+1)-th leading space inside
    /// the j-th one, for the family side and the adjoint side.
    const MatrixXcd& quotient_basis(int j) const;
    const MatrixXcd& adjoint_quotient_basis(int j) const;

    /// Lift u in the j-th leading space to a chain (u_0..u_j); least squares
    /// over the computed chain basis. Throws NotInDomain if u is not in the
    /// span.
    std::vector<VectorXcd> lift(int j, const VectorXcd& u) const;
    std::vector<VectorXcd> adjoint_lift(int j, const VectorXcd& ustar) const;

private:
    MellinFamily n_, adj_;
    double w_;
    Cplx z0_, zeta0_;
    int J_;
    SingularChains chains_, adj_chains_;
    std::vector<MatrixXcd> quot_, adj_quot_;
};

/// b_j pairing: the value at z0 of <N(z) u~(z), u*> for any chain lift u~ of
/// u; independent of the lift. u must lie in the j-th leading space at z0,
/// ustar in the j-th leading space of the adjoint at conj(z0)+iw.
Cplx pairing_bj(const PairingContext& ctx, int j, const VectorXcd& u, const VectorXcd& ustar);

/// Residue pairing Res_{z=z0} <N(z) u~(z), u*~(conj(z)+iw)> computed from
/// Laurent coefficient arithmetic.
Cplx residue_pairing(const PairingContext& ctx, const LaurentData& utilde,
                     const LaurentData& ustartilde);

/// Staged normal-operator solve: given f with poles at z0 up to depth k+1,
/// produce u of depth <= k+1+J with N(z)u(z) - f(z) holomorphic at z0.
/// Minimal-norm choices at every stage. Throws NotSolvable (with the
/// obstructing cokernel functional) if the final regular system is
/// inconsistent. max_depth, when set, caps the solution depth (for the
/// minimality property test).
LaurentData solve_at_exponent(const PairingContext& ctx, const LaurentData& f,
                              std::optional<int> max_depth = std::nullopt);

/// Max norm of the singular Laurent coefficients of N u - f at z0.
double solve_residual(const PairingContext& ctx, const LaurentData& u, const LaurentData& f);

} // namespace phgb

#endif
