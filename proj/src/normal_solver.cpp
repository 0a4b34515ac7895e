#include "phgb/normal_solver.hpp"

#include <cmath>

#include <Eigen/SVD>
#include <Eigen/QR>

namespace phgb {

namespace {

constexpr double kSolveTol = 1e-8;

/// Minimal-norm least squares with rank threshold Tol::rank_rel.
VectorXcd min_norm_solve(const MatrixXcd& a, const VectorXcd& b) {
    if (a.cols() == 0) return VectorXcd::Zero(0);
    Eigen::JacobiSVD<MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(Tol::rank_rel);
    return svd.solve(b);
}

} // namespace

PairingContext::PairingContext(const MellinFamily& n, double w, Cplx z0, int jmax)
    : n_(n), adj_(adjoint_family(n, w)), w_(w), z0_(z0),
      zeta0_(std::conj(z0) + Cplx(0, w)) {
    adj_chains_ = singular_chains(adj_, zeta0_, jmax);
    if (!adj_chains_.resolved())
        throw OrderNotResolved("adjoint order not resolved; cannot set up pairings");
    J_ = adj_chains_.ord;
    chains_ = singular_chains(n_, z0_, std::max(J_, 0));

    auto complement = [](const MatrixXcd& big, const MatrixXcd& small) {
        if (big.cols() == 0) return MatrixXcd(big.rows(), 0);
        MatrixXcd proj = big;
        if (small.cols() > 0) proj -= small * (small.adjoint() * big);
        Eigen::JacobiSVD<MatrixXcd> svd(proj, Eigen::ComputeFullU);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > Tol::rank_rel * std::max(1.0, sv(0))) ++rank;
        return MatrixXcd(svd.matrixU().leftCols(rank));
    };
    auto lead_at = [](const SingularChains& c, int j) {
        if (j < static_cast<int>(c.lead_basis.size())) return c.lead_basis[j];
        return MatrixXcd(c.n, 0);
    };
    for (int j = 0; j < J_; ++j) {
        quot_.push_back(complement(lead_at(chains_, j), lead_at(chains_, j + 1)));
        adj_quot_.push_back(complement(lead_at(adj_chains_, j), lead_at(adj_chains_, j + 1)));
        if (quot_[j].cols() != adj_quot_[j].cols())
            throw PhgbError("quotient dimensions disagree between family and adjoint");
    }
}

const MatrixXcd& PairingContext::quotient_basis(int j) const {
    if (j < 0 || j >= J_) throw InputError("quotient level out of range");
    return quot_[j];
}

const MatrixXcd& PairingContext::adjoint_quotient_basis(int j) const {
    if (j < 0 || j >= J_) throw InputError("quotient level out of range");
    return adj_quot_[j];
}

namespace {

std::vector<VectorXcd> lift_impl(const SingularChains& chains, int j, const VectorXcd& u,
                                 const char* what) {
    if (j >= static_cast<int>(chains.chain_basis.size()))
        throw InputError("chain depth not computed");
    const MatrixXcd& basis = chains.chain_basis[j];
    const int n = chains.n;
    if (basis.cols() == 0) throw NotInDomain(what);
    MatrixXcd bottom = basis.bottomRows(n);
    VectorXcd x = min_norm_solve(bottom, u);
    if ((bottom * x - u).norm() > kSolveTol * std::max(1.0, u.norm()))
        throw NotInDomain(what);
    VectorXcd stacked = basis * x;
    std::vector<VectorXcd> chain;
    for (int k = 0; k <= j; ++k) chain.push_back(stacked.segment(k * n, n));
    return chain;
}

} // namespace

std::vector<VectorXcd> PairingContext::lift(int j, const VectorXcd& u) const {
    return lift_impl(chains_, j, u, "vector is not in the leading chain space");
}

std::vector<VectorXcd> PairingContext::adjoint_lift(int j, const VectorXcd& ustar) const {
    return lift_impl(adj_chains_, j, ustar, "vector is not in the adjoint leading chain space");
}

namespace {

/// Value at z0 of N(z) u~(z) for a chain u~ in F_j (holomorphic product).
VectorXcd chain_value_at_z0(const MellinFamily& n, Cplx z0,
                            const std::vector<VectorXcd>& chain) {
    LaurentData u{z0, chain};
    LaurentProduct p = laurent_apply(n, u, 1);
    return p.taylor[0];
}

} // namespace

Cplx pairing_bj(const PairingContext& ctx, int j, const VectorXcd& u, const VectorXcd& ustar) {
    std::vector<VectorXcd> chain = ctx.lift(j, u);
    VectorXcd val = chain_value_at_z0(ctx.family(), ctx.z0(), chain);
    return (ustar.adjoint() * val)(0);
}

Cplx residue_pairing(const PairingContext& ctx, const LaurentData& utilde,
                     const LaurentData& ustartilde) {
    LaurentProduct p = laurent_apply(ctx.family(), utilde, ustartilde.depth());
    Cplx acc = 0.0;
    for (int k = 0; k < ustartilde.depth(); ++k)
        acc += (ustartilde.vectors[k].adjoint() * p.taylor[k])(0);
    return acc;
}

namespace {

/// Solve N u - (z-z0)^{-1} f0 holomorphic; u of depth at most J+1.
/// The staged descent through the quotient pairings, then the regular solve.
std::vector<VectorXcd> single_pole_solve(const PairingContext& ctx, const VectorXcd& f0) {
    const MellinFamily& n = ctx.family();
    const int J = ctx.order();
    const int nc = n.cols;

    std::vector<VectorXcd> acc(std::max(J, 0), VectorXcd::Zero(nc));
    VectorXcd fcur = f0;

    for (int j = J - 1; j >= 0; --j) {
        const MatrixXcd& qp = ctx.quotient_basis(j);
        const MatrixXcd& qs = ctx.adjoint_quotient_basis(j);
        const int p = static_cast<int>(qp.cols());
        if (p == 0) continue;

        std::vector<std::vector<VectorXcd>> lifts;
        MatrixXcd vals(n.rows, p);
        for (int a = 0; a < p; ++a) {
            lifts.push_back(ctx.lift(j, qp.col(a)));
            vals.col(a) = chain_value_at_z0(n, ctx.z0(), lifts.back());
        }
        MatrixXcd m = qs.adjoint() * vals;         // m(b,a) = b_j(qp_a, qs_b)
        VectorXcd r = qs.adjoint() * fcur;
        VectorXcd x = min_norm_solve(m, r);

        for (int a = 0; a < p; ++a)
            for (int k = 0; k <= j; ++k) acc[k] += x(a) * lifts[a][k];
        fcur -= vals * x;
    }

    MatrixXcd n0 = evaluate(n, ctx.z0());
    VectorXcd ureg = min_norm_solve(n0, fcur);
    VectorXcd resid = n0 * ureg - fcur;
    if (resid.norm() > kSolveTol * std::max(1.0, f0.norm())) {
        VectorXcd coker = resid / resid.norm();
        throw NotSolvable("normal operator solve inconsistent at the regular stage",
                          coker, ctx.z0());
    }

    std::vector<VectorXcd> out(J + 1, VectorXcd::Zero(nc));
    out[0] = ureg;
    for (int j = 0; j < J; ++j) out[j + 1] = acc[j];
    return out;
}

void trim_trailing_zeros(std::vector<VectorXcd>& v, double tol) {
    double scale = 0.0;
    for (const auto& x : v) scale = std::max(scale, x.norm());
    if (scale == 0.0) scale = 1.0;
    while (v.size() > 1 && v.back().norm() <= tol * scale) v.pop_back();
}

} // namespace

LaurentData solve_at_exponent(const PairingContext& ctx, const LaurentData& f,
                              std::optional<int> max_depth) {
    const int nc = ctx.family().cols;
    const int nr = ctx.family().rows;
    const int kdepth = f.depth();
    const int J = ctx.order();

    std::vector<VectorXcd> work = f.vectors;
    for (auto& v : work)
        if (v.size() != nr) throw DimensionMismatch("rhs dimension");
    std::vector<VectorXcd> result(kdepth + J, VectorXcd::Zero(nc));

    for (int d = kdepth - 1; d >= 0; --d) {
        std::vector<VectorXcd> piece = single_pole_solve(ctx, work[d]);
        for (int j = 0; j < static_cast<int>(piece.size()); ++j) result[d + j] += piece[j];
        if (d > 0) {
            // correction: (z-z0)^{-d} (N v - (z-z0)^{-1} f_d) has singular part
            // sum_{i<d} (z-z0)^{i-d} h_i with h = Taylor part of N v - pole
            LaurentData v{ctx.z0(), piece};
            LaurentProduct prod = laurent_apply(ctx.family(), v, d);
            for (int i = 0; i < d; ++i) work[d - 1 - i] -= prod.taylor[i];
        }
    }
    trim_trailing_zeros(result, Tol::drop);

    if (max_depth && static_cast<int>(result.size()) > *max_depth) {
        // forced-depth direct solve: unknowns u_0..u_{D-1}, conditions that
        // every singular coefficient of N u - f matches
        const int dcap = *max_depth;
        MatrixXcd sys = MatrixXcd::Zero(std::max(dcap, kdepth) * nr, dcap * nc);
        VectorXcd rhs = VectorXcd::Zero(std::max(dcap, kdepth) * nr);
        for (int p = 1; p <= std::max(dcap, kdepth); ++p) {
            for (int k = p - 1; k < dcap; ++k)
                sys.block((p - 1) * nr, k * nc, nr, nc) =
                    ctx.family().taylor_coeff(k + 1 - p, ctx.z0());
            if (p - 1 < kdepth) rhs.segment((p - 1) * nr, nr) = f.vectors[p - 1];
        }
        VectorXcd x = min_norm_solve(sys, rhs);
        if ((sys * x - rhs).norm() > kSolveTol * std::max(1.0, rhs.norm()))
            throw NotSolvable("no solution within the forced depth",
                              VectorXcd::Zero(nr), ctx.z0());
        std::vector<VectorXcd> capped(dcap, VectorXcd::Zero(nc));
        for (int k = 0; k < dcap; ++k) capped[k] = x.segment(k * nc, nc);
        trim_trailing_zeros(capped, Tol::drop);
        return LaurentData{ctx.z0(), capped};
    }
    return LaurentData{ctx.z0(), result};
}

double solve_residual(const PairingContext& ctx, const LaurentData& u, const LaurentData& f) {
    LaurentProduct p = laurent_apply(ctx.family(), u, 0);
    double worst = 0.0;
    const int depth = std::max(u.depth(), f.depth());
    for (int j = 0; j < depth; ++j) {
        VectorXcd c = VectorXcd::Zero(ctx.family().rows);
        if (j < u.depth()) c += p.singular[j];
        if (j < f.depth()) c -= f.vectors[j];
        worst = std::max(worst, c.cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace phgb
