#include "phgb/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace phgb {

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

MatrixXcd MellinFamily::taylor_coeff(int m, Cplx z0) const {
    MatrixXcd out = MatrixXcd::Zero(rows, cols);
    for (int p = m; p <= degree(); ++p)
        out += binom(p, m) * std::pow(z0, p - m) * coeffs[p];
    return out;
}

MatrixXcd evaluate(const MellinFamily& n, Cplx z) {
    MatrixXcd out = MatrixXcd::Zero(n.rows, n.cols);
    Cplx zp = 1.0;
    for (const auto& a : n.coeffs) {
        out += zp * a;
        zp *= z;
    }
    return out;
}

LaurentProduct laurent_apply(const MellinFamily& n, const LaurentData& u, int taylor_terms) {
    const int depth = u.depth();
    std::vector<MatrixXcd> ahat(n.degree() + depth + taylor_terms + 1);
    for (int m = 0; m < static_cast<int>(ahat.size()); ++m)
        ahat[m] = (m <= n.degree()) ? n.taylor_coeff(m, u.z0) : MatrixXcd::Zero(n.rows, n.cols);

    LaurentProduct out;
    out.singular.assign(depth, VectorXcd::Zero(n.rows));
    for (int j = 0; j < depth; ++j)
        for (int k = j; k < depth; ++k)
            out.singular[j] += ahat[k - j] * u.vectors[k];
    out.taylor.assign(taylor_terms, VectorXcd::Zero(n.rows));
    for (int t = 0; t < taylor_terms; ++t)
        for (int k = 0; k < depth; ++k)
            out.taylor[t] += ahat[k + 1 + t] * u.vectors[k];
    return out;
}

std::vector<PhgTerm> residue_of(const LaurentData& u) {
    std::vector<PhgTerm> terms;
    Cplx s0 = Cplx(0, 1) * u.z0;
    Cplx fac = 1.0;  // i^k / k!
    for (int k = 0; k < u.depth(); ++k) {
        VectorXcd c = fac * u.vectors[k];
        if (c.norm() > 0.0) terms.push_back({s0, k, c});
        fac *= Cplx(0, 1) / static_cast<double>(k + 1);
    }
    return terms;
}

LaurentData laurent_from_terms(Cplx s0, const std::vector<VectorXcd>& log_coeffs) {
    LaurentData out;
    out.z0 = Cplx(0, -1) * s0;
    Cplx fac = 1.0;  // k! (-i)^k
    for (int k = 0; k < static_cast<int>(log_coeffs.size()); ++k) {
        out.vectors.push_back(fac * log_coeffs[k]);
        fac *= Cplx(0, -1) * static_cast<double>(k + 1);
    }
    return out;
}

MellinFamily adjoint_family(const MellinFamily& n, double w) {
    MellinFamily m;
    m.rows = n.cols;
    m.cols = n.rows;
    m.coeffs.assign(n.degree() + 1, MatrixXcd::Zero(m.rows, m.cols));
    const Cplx miw(0, -w);  // -i w
    for (int k = 0; k <= n.degree(); ++k)
        for (int p = k; p <= n.degree(); ++p)
            m.coeffs[k] += binom(p, k) * std::pow(miw, p - k) * n.coeffs[p].adjoint();
    return m;
}

// -- determinant machinery ----------------------------------------------------

namespace {

Cplx det_at(const MellinFamily& n, Cplx z) {
    return evaluate(n, z).determinant();
}

/// Coefficients of det N(z) by interpolation at roots of unity of radius R.
std::vector<Cplx> det_coefficients(const MellinFamily& n, double radius) {
    const int deg = n.rows * n.degree();
    const int m = deg + 1;
    std::vector<Cplx> vals(m);
    for (int j = 0; j < m; ++j) {
        Cplx zj = radius * std::exp(Cplx(0, 2.0 * M_PI * j / m));
        vals[j] = det_at(n, zj);
    }
    std::vector<Cplx> c(m, 0.0);
    for (int k = 0; k < m; ++k) {
        Cplx acc = 0.0;
        for (int j = 0; j < m; ++j)
            acc += vals[j] * std::exp(Cplx(0, -2.0 * M_PI * j * k / m));
        c[k] = acc / (static_cast<double>(m) * std::pow(radius, k));
    }
    return c;
}

std::vector<Cplx> poly_roots(std::vector<Cplx> c) {
    // trim negligible leading coefficients
    double cmax = 0.0;
    for (const auto& v : c) cmax = std::max(cmax, std::abs(v));
    while (c.size() > 1 && std::abs(c.back()) <= 1e-12 * cmax) c.pop_back();
    const int d = static_cast<int>(c.size()) - 1;
    if (d <= 0) return {};
    MatrixXcd comp = MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::ComplexEigenSolver<MatrixXcd> es(comp, false);
    std::vector<Cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + d);
    return roots;
}

Cplx newton_polish(const MellinFamily& n, Cplx z, int steps = 12) {
    Cplx best = z;
    double best_abs = std::abs(det_at(n, z));
    for (int it = 0; it < steps; ++it) {
        double h = 1e-7 * (1.0 + std::abs(z));
        Cplx f = det_at(n, z);
        Cplx fp = (det_at(n, z + h) - det_at(n, z - h)) / (2.0 * h);
        if (std::abs(fp) == 0.0) break;
        Cplx step = f / fp;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
        if (std::abs(step) > 0.5 * (1.0 + std::abs(z))) break;  // diverging; keep best
        z -= step;
        double a = std::abs(det_at(n, z));
        if (a < best_abs) {
            best_abs = a;
            best = z;
        }
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
    }
    return best;
}

std::vector<Root> cluster_roots(std::vector<Cplx> roots, double tol) {
    std::vector<Root> out;
    std::sort(roots.begin(), roots.end(), [](Cplx a, Cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        Cplx acc = roots[i];
        int cnt = 1;
        used[i] = true;
        bool grew = true;
        while (grew) {
            grew = false;
            Cplx mean = acc / static_cast<double>(cnt);
            for (size_t j = 0; j < roots.size(); ++j) {
                if (used[j]) continue;
                if (std::abs(roots[j] - mean) <= tol * std::max(1.0, std::abs(mean))) {
                    acc += roots[j];
                    ++cnt;
                    used[j] = true;
                    grew = true;
                }
            }
        }
        out.push_back({acc / static_cast<double>(cnt), cnt});
    }
    std::sort(out.begin(), out.end(), [](const Root& a, const Root& b) {
        if (a.z0.real() != b.z0.real()) return a.z0.real() < b.z0.real();
        return a.z0.imag() < b.z0.imag();
    });
    return out;
}

bool identically_singular(const MellinFamily& n) {
    std::mt19937 rng(0x5eed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 4; ++trial) {
        Cplx z(u(rng), u(rng));
        Eigen::JacobiSVD<MatrixXcd> svd(evaluate(n, z));
        const auto& sv = svd.singularValues();
        if (sv(0) == 0.0) continue;
        if (sv(sv.size() - 1) / sv(0) > 1e-12) return false;
    }
    return true;
}

} // namespace

std::vector<Root> indicial_roots(const MellinFamily& n, double im_min, double im_max,
                                 double cluster_tol) {
    if (!n.square()) throw DimensionMismatch("indicial roots need a square family");
    if (identically_singular(n)) throw IdenticallySingular();
    if (n.degree() < 1) return {};

    std::vector<Cplx> c = det_coefficients(n, 1.0);
    double cmax = 0.0;
    for (const auto& v : c) cmax = std::max(cmax, std::abs(v));
    if (cmax == 0.0) throw IdenticallySingular();

    // Cauchy-style radius estimate, then one re-interpolation when the roots
    // can live far outside the unit circle.
    {
        size_t top = c.size();
        while (top > 1 && std::abs(c[top - 1]) <= 1e-12 * cmax) --top;
        double bound = 0.0;
        for (size_t k = 0; k + 1 < top; ++k)
            bound = std::max(bound, std::abs(c[k] / c[top - 1]));
        double radius = std::min(1.0 + bound, 1e3);
        if (radius > 2.0) c = det_coefficients(n, radius);
    }

    std::vector<Cplx> raw = poly_roots(std::move(c));
    for (auto& z : raw) z = newton_polish(n, z);
    std::vector<Root> clusters = cluster_roots(std::move(raw), cluster_tol);
    std::vector<Root> out;
    for (const auto& r : clusters)
        if (r.z0.imag() > im_min && r.z0.imag() < im_max) out.push_back(r);
    return out;
}

std::vector<Cplx> companion_eigenvalues(const MellinFamily& n) {
    if (!n.square()) throw DimensionMismatch("companion linearization needs a square family");
    const int d = n.degree();
    const int s = n.rows;
    Eigen::FullPivLU<MatrixXcd> lu(n.coeffs[d]);
    if (!lu.isInvertible())
        throw PhgbError("leading coefficient not invertible; companion form unavailable");
    // acts on (u, z u, ..., z^{d-1} u); the last block row encodes
    // z * (z^{d-1} u) = -A_d^{-1} (A_0 u + ... + A_{d-1} z^{d-1} u)
    MatrixXcd comp = MatrixXcd::Zero(d * s, d * s);
    for (int i = 0; i + 1 < d; ++i) comp.block(i * s, (i + 1) * s, s, s).setIdentity();
    for (int m = 0; m < d; ++m)
        comp.block((d - 1) * s, m * s, s, s) = -lu.solve(n.coeffs[m]);
    Eigen::ComplexEigenSolver<MatrixXcd> es(comp, false);
    return std::vector<Cplx>(es.eigenvalues().data(), es.eigenvalues().data() + d * s);
}

SingularChains singular_chains(const MellinFamily& n, Cplx z0, int jmax, double rank_tol) {
    SingularChains out;
    out.z0 = z0;
    out.jmax = jmax;
    out.n = n.cols;

    std::vector<MatrixXcd> ahat(n.degree() + 1);
    for (int m = 0; m <= n.degree(); ++m) ahat[m] = n.taylor_coeff(m, z0);
    auto ahat_at = [&](int m) -> MatrixXcd {
        if (m <= n.degree()) return ahat[m];
        return MatrixXcd::Zero(n.rows, n.cols);
    };

    for (int j = 0; j <= jmax; ++j) {
        const int br = (j + 1) * n.rows, bc = (j + 1) * n.cols;
        if (n.cols == 0) {
            out.chain_basis.push_back(MatrixXcd::Zero(0, 0));
            out.lead_basis.push_back(MatrixXcd::Zero(0, 0));
            out.lead_dims.push_back(0);
            out.ord = j;
            break;
        }
        MatrixXcd nullbasis;
        if (n.rows == 0) {
            nullbasis = MatrixXcd::Identity(bc, bc);  // no conditions
        } else {
            MatrixXcd t = MatrixXcd::Zero(br, bc);
            for (int q = 0; q <= j; ++q)
                for (int k = q; k <= j; ++k)
                    t.block(q * n.rows, k * n.cols, n.rows, n.cols) = ahat_at(k - q);
            Eigen::JacobiSVD<MatrixXcd> svd(t, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            double smax = sv.size() ? sv(0) : 0.0;
            int rank = 0;
            for (int i = 0; i < sv.size(); ++i)
                if (sv(i) > rank_tol * std::max(smax, 1.0)) ++rank;
            nullbasis = svd.matrixV().rightCols(bc - rank);
        }
        out.chain_basis.push_back(nullbasis);

        // leading-order space: bottom block of each null vector
        int ldim = 0;
        MatrixXcd lbasis = MatrixXcd::Zero(n.cols, 0);
        if (nullbasis.cols() > 0) {
            MatrixXcd lead = nullbasis.bottomRows(n.cols);
            Eigen::JacobiSVD<MatrixXcd> lsvd(lead, Eigen::ComputeFullU);
            const auto& ls = lsvd.singularValues();
            double lmax = ls.size() ? ls(0) : 0.0;
            for (int i = 0; i < ls.size(); ++i)
                if (ls(i) > rank_tol * std::max(lmax, 1.0)) ++ldim;
            lbasis = lsvd.matrixU().leftCols(ldim);
        }
        out.lead_basis.push_back(lbasis);
        out.lead_dims.push_back(ldim);
        if (ldim == 0) {
            out.ord = j;
            break;
        }
    }
    if (out.ord < 0 && !out.lead_dims.empty() && out.lead_dims.back() == 0)
        out.ord = static_cast<int>(out.lead_dims.size()) - 1;
    return out;
}

int chain_order(const MellinFamily& n, Cplx z0, int jmax, bool throw_unresolved) {
    SingularChains c = singular_chains(n, z0, jmax);
    if (!c.resolved() && throw_unresolved)
        throw OrderNotResolved("order not resolved by jmax; chains keep growing");
    return c.ord;
}

std::vector<Root> kernel_points(const MellinFamily& n, double im_min, double im_max) {
    if (n.rows < n.cols)
        throw InputError(
            "family is wide (kernel at every point): no isolated kernel points exist and "
            "the order is unbounded");
    if (n.square()) {
        std::vector<Root> roots = indicial_roots(n, im_min, im_max);
        std::vector<Root> out;
        for (const auto& r : roots) {
            Eigen::JacobiSVD<MatrixXcd> svd(evaluate(n, r.z0));
            const auto& sv = svd.singularValues();
            if (sv(sv.size() - 1) <= 1e-6 * std::max(1.0, sv(0))) out.push_back(r);
        }
        return out;
    }
    // tall family: candidates from a randomized square projection
    std::mt19937 rng(0xb00c);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int attempt = 0; attempt < 3; ++attempt) {
        MatrixXcd proj(n.cols, n.rows);
        for (int i = 0; i < proj.rows(); ++i)
            for (int j = 0; j < proj.cols(); ++j) proj(i, j) = Cplx(g(rng), g(rng));
        MellinFamily gfam;
        gfam.rows = n.cols;
        gfam.cols = n.cols;
        for (const auto& a : n.coeffs) gfam.coeffs.push_back(proj * a);
        std::vector<Root> cands;
        try {
            cands = indicial_roots(gfam, im_min, im_max);
        } catch (const IdenticallySingular&) {
            continue;  // unlucky projection
        }
        std::vector<Root> out;
        for (const auto& r : cands) {
            Eigen::JacobiSVD<MatrixXcd> svd(evaluate(n, r.z0));
            const auto& sv = svd.singularValues();
            if (sv(sv.size() - 1) <= 1e-6 * std::max(1.0, sv(0))) out.push_back(r);
        }
        return out;
    }
    throw PhgbError("kernel point search failed: projections degenerate");
}

OrdFunction::OrdFunction(MellinFamily adjoint, double w, int jmax)
    : adjoint_(std::move(adjoint)), w_(w), jmax_(jmax) {}

Cplx OrdFunction::mellin_point(Cplx s) const {
    return std::conj(Cplx(0, -1) * s) + Cplx(0, w_);
}

int OrdFunction::operator()(Cplx s) const {
    for (const auto& [key, val] : cache_)
        if (same_exponent(key, s)) return val;
    int ord = chain_order(adjoint_, mellin_point(s), jmax_, true);
    cache_.emplace_back(s, ord);
    return ord;
}

std::vector<Cplx> OrdFunction::singular_exponents(double re_min, double re_max) const {
    // open exponent window (re_min, re_max), guarded so that roots sitting
    // numerically on an endpoint stay excluded
    std::vector<Root> pts = kernel_points(adjoint_, re_min + w_, re_max + w_);
    std::vector<Cplx> out;
    for (const auto& r : pts) {
        Cplx s = std::conj(Cplx(0, -1) * (r.z0 - Cplx(0, w_)));
        if (s.real() > re_min + 1e-9 && s.real() < re_max - 1e-9) out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](Cplx a, Cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

} // namespace phgb
