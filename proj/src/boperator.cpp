#include "phgb/boperator.hpp"

#include <cmath>

namespace phgb {

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

BOperator::BOperator(int order, int taylor_depth, int rows, int cols, double weight,
                     std::string label)
    : order_(order), taylor_depth_(taylor_depth), rows_(rows), cols_(cols),
      weight_(weight), label_(std::move(label)), zero_(MatrixXcd::Zero(rows, cols)) {
    if (order < 0 || taylor_depth < 0 || rows < 0 || cols <= 0)
        throw InputError("bad operator shape");
}

const MatrixXcd& BOperator::block(int j, int t) const {
    if (t > taylor_depth_)
        throw TaylorDepthExceeded("coefficient beyond the Taylor depth requested");
    if (j < 0 || t < 0 || j > order_) return zero_;
    auto it = blocks_.find({j, t});
    return it == blocks_.end() ? zero_ : it->second;
}

bool BOperator::has_block(int j, int t) const { return blocks_.count({j, t}) > 0; }

void BOperator::set_block(int j, int t, MatrixXcd a) {
    if (j < 0 || j > order_) throw InputError("block order out of range");
    if (t < 0 || t > taylor_depth_) throw TaylorDepthExceeded("block beyond Taylor depth");
    if (a.rows() != rows_ || a.cols() != cols_) throw DimensionMismatch("block shape");
    if (a.cwiseAbs().maxCoeff() == 0.0) {
        blocks_.erase({j, t});
        return;
    }
    blocks_[{j, t}] = std::move(a);
}

BOperator BOperator::rho_d_rho(double weight, int taylor_depth) {
    BOperator p(1, taylor_depth, 1, 1, weight, "rho*D_rho");
    p.set_block(1, 0, MatrixXcd::Ones(1, 1));
    return p;
}

MellinFamily normal_part(const BOperator& p) {
    MellinFamily n;
    n.rows = p.rows();
    n.cols = p.cols();
    n.coeffs.assign(p.order() + 1, MatrixXcd::Zero(p.rows(), p.cols()));
    for (int j = 0; j <= p.order(); ++j) n.coeffs[j] = p.block(j, 0);
    while (n.coeffs.size() > 1 && n.coeffs.back().cwiseAbs().maxCoeff() == 0.0)
        n.coeffs.pop_back();
    return n;
}

PhgExpansion apply_to_expansion(const BOperator& p, const PhgExpansion& u) {
    if (u.dim() != 0 && u.dim() != p.cols())
        throw DimensionMismatch("expansion dimension does not match the operator");

    PhgExpansion out;
    out.remainder_order = u.remainder_order;
    for (const auto& t : u.terms)
        out.remainder_order =
            std::min(out.remainder_order, t.s.real() + p.taylor_depth() + 1.0);

    for (const auto& [jt, a] : p.blocks()) {
        const auto [j, tshift] = jt;
        for (const auto& term : u.terms) {
            // (rho D_rho)^j on rho^s log^k: iterate the first-order rule
            //   (rho D_rho)[rho^s log^k v] = -i s rho^s log^k v - i k rho^s log^{k-1} v
            std::map<int, Cplx> logs;  // log power -> scalar factor
            logs[term.k] = 1.0;
            for (int it = 0; it < j; ++it) {
                std::map<int, Cplx> next;
                for (const auto& [k, c] : logs) {
                    next[k] += c * Cplx(0, -1) * term.s;
                    if (k >= 1) next[k - 1] += c * Cplx(0, -1) * static_cast<double>(k);
                }
                logs.swap(next);
            }
            Cplx s_out = term.s + static_cast<double>(tshift);
            if (s_out.real() >= out.remainder_order) continue;
            for (const auto& [k, c] : logs) {
                if (c == Cplx(0.0)) continue;
                add_term_inplace(out, {s_out, k, (a * term.coeff) * c});
            }
        }
    }
    clean_expansion(out, 0.0);  // drop exact zeros only
    return out;
}

BOperator adjoint(const BOperator& p) {
    BOperator q(p.order(), p.taylor_depth(), p.cols(), p.rows(), p.weight(),
                p.label().empty() ? "" : p.label() + "*");
    // (A rho^t (rho D_rho)^j)^* = rho^t (rho D_rho - i(t+w))^j A^H
    std::map<std::pair<int, int>, MatrixXcd> acc;
    for (const auto& [jt, a] : p.blocks()) {
        const auto [j, t] = jt;
        const Cplx shift(0, -(t + p.weight()));
        for (int i = 0; i <= j; ++i) {
            MatrixXcd contrib = binom(j, i) * std::pow(shift, j - i) * a.adjoint();
            auto key = std::make_pair(i, t);
            auto it = acc.find(key);
            if (it == acc.end()) acc[key] = contrib;
            else it->second += contrib;
        }
    }
    for (auto& [key, m] : acc) q.set_block(key.first, key.second, std::move(m));
    return q;
}

BOperator conjugate_by_weight(const BOperator& p, double alpha) {
    BOperator q(p.order(), p.taylor_depth(), p.rows(), p.cols(), p.weight(), p.label());
    std::map<std::pair<int, int>, MatrixXcd> acc;
    const Cplx shift(0, -alpha);
    for (const auto& [jt, a] : p.blocks()) {
        const auto [j, t] = jt;
        for (int i = 0; i <= j; ++i) {
            MatrixXcd contrib = binom(j, i) * std::pow(shift, j - i) * a;
            auto key = std::make_pair(i, t);
            auto it = acc.find(key);
            if (it == acc.end()) acc[key] = contrib;
            else it->second += contrib;
        }
    }
    for (auto& [key, m] : acc) q.set_block(key.first, key.second, std::move(m));
    return q;
}

BOperator compose(const BOperator& p, const BOperator& q) {
    if (p.cols() != q.rows())
        throw DimensionMismatch("compose: inner dimensions do not match");
    const int depth = std::min(p.taylor_depth(), q.taylor_depth());
    BOperator out(p.order() + q.order(), depth, p.rows(), q.cols(), q.weight());
    std::map<std::pair<int, int>, MatrixXcd> acc;
    // A rho^t (rho D_rho)^j  B rho^{t'} (rho D_rho)^{j'}
    //   = A B rho^{t+t'} (rho D_rho - i t')^j (rho D_rho)^{j'}
    for (const auto& [jt, a] : p.blocks()) {
        const auto [j, t] = jt;
        for (const auto& [jt2, b] : q.blocks()) {
            const auto [j2, t2] = jt2;
            if (t + t2 > depth) continue;
            const Cplx shift(0, -static_cast<double>(t2));
            MatrixXcd ab = a * b;
            for (int i = 0; i <= j; ++i) {
                MatrixXcd contrib = binom(j, i) * std::pow(shift, j - i) * ab;
                auto key = std::make_pair(i + j2, t + t2);
                auto it = acc.find(key);
                if (it == acc.end()) acc[key] = contrib;
                else it->second += contrib;
            }
        }
    }
    for (auto& [key, m] : acc) out.set_block(key.first, key.second, std::move(m));
    return out;
}

OrdFunction make_ord_function(const BOperator& p, int jmax) {
    return OrdFunction(adjoint_family(normal_part(p), p.weight()), p.weight(), jmax);
}

SpectrumReport spectrum_report(const BOperator& p, double re_min, double re_max, int jmax) {
    OrdFunction ord = make_ord_function(p, jmax);
    SpectrumReport rep;
    rep.im_min = re_min + p.weight();
    rep.im_max = re_max + p.weight();

    std::vector<Root> det_roots;
    if (ord.adjoint().square()) {
        try {
            det_roots = indicial_roots(ord.adjoint(), rep.im_min - 1e-9, rep.im_max);
        } catch (const IdenticallySingular&) {
        }
    }
    for (const Cplx& s : ord.singular_exponents(re_min, re_max)) {
        Cplx zeta = ord.mellin_point(s);
        SingularChains chains = singular_chains(ord.adjoint(), zeta, jmax);
        if (!chains.resolved() || chains.ord == 0) continue;
        SpectrumPoint pt;
        pt.s = s;
        pt.z0 = Cplx(0, -1) * s;
        pt.ord = chains.ord;
        pt.quotient_dims.assign(chains.lead_dims.begin(), chains.lead_dims.begin() + chains.ord);
        for (const auto& r : det_roots)
            if (std::abs(r.z0 - zeta) <= 1e-6 * std::max(1.0, std::abs(zeta)))
                pt.det_multiplicity = r.multiplicity;
        pt.provenance = p.label();
        rep.points.push_back(pt);
    }
    return rep;
}

} // namespace phgb
