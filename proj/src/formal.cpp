#include "phgb/formal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace phgb {

namespace {

IndexSet union_index_sets(const IndexSet& a, const IndexSet& b) {
    std::vector<IndexEntry> e = a.entries;
    e.insert(e.end(), b.entries.begin(), b.entries.end());
    return validate_index_set(std::move(e), std::min(a.horizon, b.horizon));
}

PhgExpansion shift_expansion(const PhgExpansion& e, double shift) {
    PhgExpansion out;
    out.remainder_order = e.remainder_order + shift;
    for (const auto& t : e.terms) out.terms.push_back({t.s + shift, t.k, t.coeff});
    return out;
}

/// Shared cache of pairing contexts per exponent.
class ContextCache {
public:
    ContextCache(const BOperator& p, int jmax = 6) : n_(normal_part(p)), w_(p.weight()), jmax_(jmax) {}
    const PairingContext& at_exponent(Cplx s) {
        for (auto& [key, ctx] : items_)
            if (same_exponent(key, s)) return *ctx;
        Cplx z0 = Cplx(0, -1) * s;
        items_.emplace_back(s, std::make_shared<PairingContext>(n_, w_, z0, jmax_));
        return *items_.back().second;
    }

private:
    MellinFamily n_;
    double w_;
    int jmax_;
    std::vector<std::pair<Cplx, std::shared_ptr<PairingContext>>> items_;
};

struct IterOutcome {
    PhgExpansion solution;
    PhgExpansion rhs_left;
    std::vector<ExponentDiagnostic> diagnostics;
};

/// Core iteration: solve away rhs groups from the lowest exponent up,
/// accumulating onto `solution`, until everything left is at or above target.
IterOutcome iterate_formal(const BOperator& p, PhgExpansion solution, PhgExpansion rhs,
                           double target, ContextCache& cache) {
    IterOutcome out;
    rhs.remainder_order = std::max(rhs.remainder_order, target);
    solution.remainder_order = std::max(solution.remainder_order, target);

    // fixed reference scale: round-off dust never masquerades as a term
    double scale = 1e-300;
    for (const auto& t : rhs.terms) scale = std::max(scale, t.coeff.cwiseAbs().maxCoeff());
    for (const auto& t : solution.terms) scale = std::max(scale, t.coeff.cwiseAbs().maxCoeff());
    if (scale < 1e-300) scale = 1.0;

    while (true) {
        drop_below(rhs, Tol::drop * scale);
        const PhgTerm* lowest = nullptr;
        for (const auto& t : rhs.terms) {
            if (t.s.real() >= target) continue;
            if (!lowest || entry_less({t.s, t.k}, {lowest->s, lowest->k})) lowest = &t;
        }
        if (!lowest) break;
        const Cplx s = lowest->s;
        if (s.real() + p.taylor_depth() + 1.0 < target)
            throw TaylorDepthExceeded("Taylor depth cannot certify the gap to the target order");

        // collect the exponent group
        int kmax = 0;
        for (const auto& t : rhs.terms)
            if (same_exponent(t.s, s)) kmax = std::max(kmax, t.k);
        std::vector<VectorXcd> logc(kmax + 1, VectorXcd::Zero(p.rows()));
        for (const auto& t : rhs.terms)
            if (same_exponent(t.s, s)) logc[t.k] = t.coeff;

        const PairingContext& ctx = cache.at_exponent(s);
        LaurentData fl = laurent_from_terms(s, logc);
        LaurentData ul;
        try {
            ul = solve_at_exponent(ctx, fl);
        } catch (NotSolvable& e) {
            throw NotSolvable(std::string(e.what()) + " at exponent Re s = " +
                                  std::to_string(s.real()),
                              e.cokernel, e.z0);
        }

        ExponentDiagnostic diag;
        diag.s = s;
        diag.ord = ctx.order();
        diag.logs_added = std::max(0, ul.depth() - fl.depth());
        if (ctx.order() > 0) {
            const MatrixXcd& coker = ctx.adjoint_chains().lead_basis[0];
            if (coker.cols() > 0)
                diag.cokernel_pairing = (coker.adjoint() * fl.vectors.back()).norm();
        }
        out.diagnostics.push_back(diag);

        PhgExpansion newterms;
        newterms.remainder_order = solution.remainder_order;
        for (const auto& t : residue_of(ul)) add_term_inplace(newterms, t);
        for (const auto& t : newterms.terms) add_term_inplace(solution, t);

        PhgExpansion applied = apply_to_expansion(p, newterms);
        rhs.remainder_order = std::min(rhs.remainder_order, applied.remainder_order);
        for (auto& t : applied.terms) {
            scale = std::max(scale, t.coeff.cwiseAbs().maxCoeff());
            if (t.s.real() >= rhs.remainder_order) continue;
            add_term_inplace(rhs, {t.s, t.k, -t.coeff});
        }

        // the solved group must cancel; anything left there is round-off
        double group_scale = 0.0;
        for (const auto& t : rhs.terms)
            if (same_exponent(t.s, s)) group_scale = std::max(group_scale, t.coeff.norm());
        std::vector<PhgTerm> kept;
        for (auto& t : rhs.terms) {
            if (same_exponent(t.s, s)) {
                if (t.coeff.norm() > 1e-7 * std::max(1.0, group_scale))
                    throw PhgbError("internal: solved exponent group did not cancel");
                continue;
            }
            kept.push_back(std::move(t));
        }
        rhs.terms.swap(kept);
    }

    drop_below(rhs, Tol::drop * scale);
    drop_below(solution, Tol::drop * scale);
    out.solution = std::move(solution);
    out.rhs_left = std::move(rhs);
    return out;
}

PhgExpansion negate(const PhgExpansion& e) {
    PhgExpansion out = e;
    for (auto& t : out.terms) t.coeff = -t.coeff;
    return out;
}

IndexSet forcing_prediction(const BOperator& p, const PhgExpansion& f, double target) {
    OrdFunction ord = make_ord_function(p);
    IndexSet fset = validate_index_set(f.realized_index_set().entries, target);
    return predicted_index_set(fset, [&ord](Cplx s) { return ord(s); },
                               PredictVariant::Forcing, target);
}

void check_containment(const IndexSet& realized, const IndexSet& predicted) {
    for (const auto& e : realized.entries)
        if (!predicted.contains(e.s, e.k))
            throw PredictionViolated("realized term (Re s=" + std::to_string(e.s.real()) +
                                     ", k=" + std::to_string(e.k) +
                                     ") outside the predicted index set");
}

/// Canonical insertion at a spectrum point: the minimal-norm chain in
/// F_{J-1} at z0 whose residue pairing with every adjoint chain basis
/// element equals one. Models a generically nonzero global pairing.
PhgExpansion unit_pairing_insertion(const PairingContext& ctx, double remainder) {
    const int J = ctx.order();
    const MellinFamily& n = ctx.family();
    const MatrixXcd& pchains = ctx.chains().chain_basis[J - 1];
    const MatrixXcd& achains = ctx.adjoint_chains().chain_basis[J - 1];
    const int np = static_cast<int>(pchains.cols());
    const int na = static_cast<int>(achains.cols());
    if (np == 0 || na == 0)
        throw PhgbError("no chains available for the insertion at a spectrum point");

    auto column_chain = [&](const MatrixXcd& m, int col, int dim) {
        std::vector<VectorXcd> chain;
        for (int k = 0; k * dim < m.rows(); ++k) chain.push_back(m.block(k * dim, col, dim, 1));
        return chain;
    };

    MatrixXcd b(na, np);
    for (int a = 0; a < np; ++a) {
        LaurentData va{ctx.z0(), column_chain(pchains, a, n.cols)};
        for (int t = 0; t < na; ++t) {
            LaurentData ut{ctx.zeta0(), column_chain(achains, t, n.rows)};
            b(t, a) = residue_pairing(ctx, va, ut);
        }
    }
    Eigen::JacobiSVD<MatrixXcd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(Tol::rank_rel);
    VectorXcd x = svd.solve(VectorXcd::Ones(na));

    std::vector<VectorXcd> chain(J, VectorXcd::Zero(n.cols));
    for (int a = 0; a < np; ++a) {
        auto ca = column_chain(pchains, a, n.cols);
        for (int k = 0; k < J; ++k) chain[k] += x(a) * ca[k];
    }
    // trim numerically-zero leading logs so the inserted term is as short as
    // the pairing data allows
    double scale = 0.0;
    for (const auto& v : chain) scale = std::max(scale, v.norm());
    while (chain.size() > 1 && chain.back().norm() <= 1e-12 * std::max(1.0, scale))
        chain.pop_back();

    PhgExpansion out;
    out.remainder_order = remainder;
    for (const auto& t : residue_of(LaurentData{ctx.z0(), chain})) add_term_inplace(out, t);
    return out;
}

} // namespace

SolveReport formal_solve(const BOperator& p, const PhgExpansion& f, double target_order) {
    ContextCache cache(p);
    PhgExpansion empty;
    empty.remainder_order = target_order;
    IterOutcome it = iterate_formal(p, empty, f, target_order, cache);

    SolveReport rep;
    rep.route = SolveRoute::Direct;
    rep.target_order = target_order;
    rep.solution = std::move(it.solution);
    rep.residual = negate(it.rhs_left);
    rep.realized = rep.solution.realized_index_set();
    rep.predicted = forcing_prediction(p, f, target_order);
    rep.diagnostics = std::move(it.diagnostics);
    return rep;
}

double alpha0_from_spectrum(const BOperator& p, double alpha_coker, double search_max) {
    if (!std::isfinite(alpha_coker)) return std::numeric_limits<double>::infinity();
    OrdFunction ord = make_ord_function(p);
    std::vector<Cplx> pts = ord.singular_exponents(alpha_coker - 1e-6, search_max);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : pts) {
        if (std::abs(s.real() - alpha_coker) <= Tol::root_cluster) return alpha_coker;
        if (s.real() > alpha_coker) best = std::min(best, s.real());
    }
    return best;
}

SolveReport sharp_solve(const BOperator& p, const PhgExpansion& f, double alpha_coker,
                        double target_order) {
    ContextCache cache(p);
    OrdFunction ord = make_ord_function(p);
    const double alpha0 = alpha0_from_spectrum(p, alpha_coker, target_order);

    PhgExpansion solution;
    solution.remainder_order = target_order;
    PhgExpansion rhs = f;
    rhs.remainder_order = std::max(rhs.remainder_order, target_order);

    std::vector<IndexEntry> spec_entries;
    if (std::isfinite(alpha0)) {
        for (const Cplx& s : ord.singular_exponents(alpha0 - 1e-6, target_order)) {
            if (s.real() < alpha0 - Tol::root_cluster) continue;
            const PairingContext& ctx = cache.at_exponent(s);
            if (ctx.order() == 0) continue;
            for (int k = 0; k < ctx.order(); ++k) spec_entries.push_back({s, k});
            PhgExpansion ins = unit_pairing_insertion(ctx, target_order);
            for (const auto& t : ins.terms) add_term_inplace(solution, t);
            PhgExpansion applied = apply_to_expansion(p, ins);
            rhs.remainder_order = std::min(rhs.remainder_order, applied.remainder_order);
            for (auto& t : applied.terms)
                if (t.s.real() < rhs.remainder_order)
                    add_term_inplace(rhs, {t.s, t.k, -t.coeff});
        }
    }

    IterOutcome it = iterate_formal(p, solution, rhs, target_order, cache);

    SolveReport rep;
    rep.route = SolveRoute::Direct;
    rep.target_order = target_order;
    rep.solution = std::move(it.solution);
    rep.residual = negate(it.rhs_left);
    rep.realized = rep.solution.realized_index_set();

    IndexSet e_forcing = forcing_prediction(p, f, target_order);
    IndexSet e_schwartz = predicted_index_set(
        validate_index_set(spec_entries, target_order),
        [&ord](Cplx s) { return ord(s); }, PredictVariant::Schwartz, target_order);
    rep.predicted = union_index_sets(e_forcing, e_schwartz);
    rep.diagnostics = std::move(it.diagnostics);

    check_containment(rep.realized, rep.predicted);
    return rep;
}

SolveReport ppstar_formal_solve(const BOperator& p, double alpha, const PhgExpansion& f,
                                double alpha_coker, double target_order) {
    BOperator palpha = conjugate_by_weight(p, alpha);
    BOperator t_alpha = compose(palpha, adjoint(palpha));
    const double target_v = target_order - alpha;

    ContextCache tcache(t_alpha);
    OrdFunction tord = make_ord_function(t_alpha);
    OrdFunction pord = make_ord_function(p);
    std::vector<Cplx> pspec = pord.singular_exponents(-1e6, target_order);

    PhgExpansion vsol;
    vsol.remainder_order = target_v;
    PhgExpansion rhs_v = shift_expansion(f, -alpha);
    rhs_v.remainder_order = std::max(rhs_v.remainder_order, target_v);

    std::vector<IndexEntry> vspec_entries;
    for (const Cplx& sv : tord.singular_exponents(1e-6, target_v)) {
        const Cplx su = sv + alpha;
        bool skip = false;
        for (const Cplx& sp : pspec) {
            if (std::abs(sp - su) <= 1e-6 * std::max(1.0, std::abs(su)) &&
                sp.real() < alpha_coker) {
                skip = true;  // pairing with this cokernel level is declared zero
                break;
            }
        }
        if (skip) continue;
        const PairingContext& ctx = tcache.at_exponent(sv);
        if (ctx.order() == 0) continue;
        for (int k = 0; k < ctx.order(); ++k) vspec_entries.push_back({sv, k});
        PhgExpansion ins = unit_pairing_insertion(ctx, target_v);
        for (const auto& t : ins.terms) add_term_inplace(vsol, t);
        PhgExpansion applied = apply_to_expansion(t_alpha, ins);
        rhs_v.remainder_order = std::min(rhs_v.remainder_order, applied.remainder_order);
        for (auto& t : applied.terms)
            if (t.s.real() < rhs_v.remainder_order)
                add_term_inplace(rhs_v, {t.s, t.k, -t.coeff});
    }

    IterOutcome vit = iterate_formal(t_alpha, vsol, rhs_v, target_v, tcache);

    // u = rho^{2 alpha} P^* rho^{-alpha} v
    PhgExpansion u = shift_expansion(
        apply_to_expansion(adjoint(p), shift_expansion(vit.solution, -alpha)), 2.0 * alpha);
    u.remainder_order = std::min(u.remainder_order, target_order);
    std::vector<PhgTerm> keep;
    for (auto& t : u.terms)
        if (t.s.real() < u.remainder_order) keep.push_back(std::move(t));
    u.terms.swap(keep);
    clean_expansion(u);

    SolveReport rep;
    rep.route = SolveRoute::PPStar;
    rep.target_order = target_order;
    rep.solution = std::move(u);
    rep.realized = rep.solution.realized_index_set();
    rep.diagnostics = std::move(vit.diagnostics);

    // prediction transported from the v side
    IndexSet v_forcing = forcing_prediction(t_alpha, shift_expansion(f, -alpha), target_v);
    IndexSet v_schwartz = predicted_index_set(
        validate_index_set(vspec_entries, target_v),
        [&tord](Cplx s) { return tord(s); }, PredictVariant::Schwartz, target_v);
    IndexSet v_pred = union_index_sets(v_forcing, v_schwartz);
    std::vector<IndexEntry> shifted;
    for (const auto& e : v_pred.entries) shifted.push_back({e.s + alpha, e.k});
    rep.predicted = validate_index_set(std::move(shifted), target_order);

    // honest residual of the produced u
    PhgExpansion pu = apply_to_expansion(p, rep.solution);
    PhgExpansion resid = pu;
    resid.remainder_order = std::min(resid.remainder_order, f.remainder_order);
    for (const auto& t : f.terms)
        if (t.s.real() < resid.remainder_order) add_term_inplace(resid, {t.s, t.k, -t.coeff});
    double uscale = 1.0;
    for (const auto& t : rep.solution.terms)
        uscale = std::max(uscale, t.coeff.cwiseAbs().maxCoeff());
    for (const auto& t : f.terms) uscale = std::max(uscale, t.coeff.cwiseAbs().maxCoeff());
    drop_below(resid, 1e-12 * uscale);
    rep.residual = std::move(resid);

    SolveReport sharp = sharp_solve(p, f, alpha_coker, target_order);
    rep.comparison_realized = sharp.realized.entries;

    check_containment(rep.realized, rep.predicted);
    return rep;
}

SolveReport kernel_element(const BOperator& p, Cplx s0, int k, double target_order) {
    const Cplx z0 = Cplx(0, -1) * s0;
    MellinFamily n = normal_part(p);
    SingularChains chains = singular_chains(n, z0, k);
    if (static_cast<int>(chains.lead_dims.size()) <= k || chains.lead_dims[k] == 0)
        throw NotUnderdetermined("chains stabilize before the requested log depth");

    // unit leading vector, minimal-norm chain below it
    VectorXcd lead = chains.lead_basis[k].col(0);
    const MatrixXcd& basis = chains.chain_basis[k];
    MatrixXcd bottom = basis.bottomRows(n.cols);
    Eigen::JacobiSVD<MatrixXcd> svd(bottom, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(Tol::rank_rel);
    VectorXcd x = svd.solve(lead);
    VectorXcd stacked = basis * x;
    std::vector<VectorXcd> chain;
    for (int i = 0; i <= k; ++i) chain.push_back(stacked.segment(i * n.cols, n.cols));

    PhgExpansion uprime;
    uprime.remainder_order = target_order;
    for (const auto& t : residue_of(LaurentData{z0, chain})) add_term_inplace(uprime, t);

    PhgExpansion err = apply_to_expansion(p, uprime);
    PhgExpansion rhs;
    rhs.remainder_order = std::min(err.remainder_order, target_order);
    for (const auto& t : err.terms)
        if (t.s.real() < rhs.remainder_order) add_term_inplace(rhs, {t.s, t.k, -t.coeff});

    ContextCache cache(p);
    IterOutcome it = iterate_formal(p, uprime, rhs, target_order, cache);

    SolveReport rep;
    rep.route = SolveRoute::Kernel;
    rep.target_order = target_order;
    rep.solution = std::move(it.solution);
    rep.residual = negate(it.rhs_left);
    rep.realized = rep.solution.realized_index_set();
    OrdFunction ord = make_ord_function(p);
    rep.predicted = predicted_index_set(validate_index_set({{s0, k}}, target_order),
                                        [&ord](Cplx s) { return ord(s); },
                                        PredictVariant::Forcing, target_order);
    rep.diagnostics = std::move(it.diagnostics);
    return rep;
}

} // namespace phgb
