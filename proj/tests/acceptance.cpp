// Acceptance suite: one pass/fail line per criterion, all tolerances pinned.
// Returns a nonzero exit status when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "phgb/euclid.hpp"
#include "phgb/formal.hpp"
#include "phgb/normal_solver.hpp"

using namespace phgb;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& what) {
    std::printf("CRITERION %d [%s] %s\n", idx, ok ? "PASS" : "FAIL", what.c_str());
    if (!ok) ++failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

MetricSpec euclid3() {
    MetricSpec m;
    m.n = 3;
    return m;
}

MatrixXcd random_matrix(std::mt19937& rng, int r, int c) {
    std::normal_distribution<double> g;
    MatrixXcd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = Cplx(g(rng), g(rng));
    return m;
}

MellinFamily planted_family(std::mt19937& rng, int size, Cplx z0,
                            const std::vector<int>& partial_mults) {
    MellinFamily d;
    d.rows = d.cols = size;
    int maxk = 0;
    for (int k : partial_mults) maxk = std::max(maxk, k);
    d.coeffs.assign(maxk + 1, MatrixXcd::Zero(size, size));
    for (int i = 0; i < size; ++i) {
        int k = i < static_cast<int>(partial_mults.size()) ? partial_mults[i] : 0;
        for (int m = 0; m <= k; ++m) {
            double b = 1.0;
            for (int t = 1; t <= m; ++t) b = b * (k - m + t) / t;
            d.coeffs[m](i, i) = b * std::pow(-z0, k - m);
        }
    }
    MatrixXcd e0 = random_matrix(rng, size, size) + 3.0 * MatrixXcd::Identity(size, size);
    MatrixXcd f0 = random_matrix(rng, size, size) + 3.0 * MatrixXcd::Identity(size, size);
    MatrixXcd s = MatrixXcd::Zero(size, size);
    for (int i = 0; i + 1 < size; ++i) s(i, i + 1) = random_matrix(rng, 1, 1)(0, 0);
    MellinFamily out;
    out.rows = out.cols = size;
    out.coeffs.assign(d.coeffs.size() + 1, MatrixXcd::Zero(size, size));
    for (int m = 0; m < static_cast<int>(d.coeffs.size()); ++m) {
        MatrixXcd base = e0 * d.coeffs[m] * f0;
        MatrixXcd twist = e0 * s * d.coeffs[m] * f0;
        out.coeffs[m] += base - z0 * twist;
        out.coeffs[m + 1] += twist;
    }
    return out;
}

BOperator direct_sum(const BOperator& a, const BOperator& b) {
    BOperator out(std::max(a.order(), b.order()), std::min(a.taylor_depth(), b.taylor_depth()),
                  a.rows() + b.rows(), a.cols() + b.cols(), a.weight());
    for (const auto& [jt, m] : a.blocks()) {
        MatrixXcd blk = MatrixXcd::Zero(out.rows(), out.cols());
        blk.topLeftCorner(a.rows(), a.cols()) = m;
        out.set_block(jt.first, jt.second, blk);
    }
    for (const auto& [jt, m] : b.blocks()) {
        MatrixXcd blk = out.has_block(jt.first, jt.second)
                            ? out.block(jt.first, jt.second)
                            : MatrixXcd::Zero(out.rows(), out.cols());
        blk.bottomRightCorner(b.rows(), b.cols()) = m;
        out.set_block(jt.first, jt.second, blk);
    }
    return out;
}

double log_coeff(const PhgExpansion& e, double s, int k) {
    const PhgTerm* t = e.find(Cplx(s, 0), k);
    return t ? t->coeff.norm() : 0.0;
}

double residual_below(const BOperator& p, const PhgExpansion& u, const PhgExpansion& f,
                      double target) {
    PhgExpansion pu = apply_to_expansion(p, u);
    for (const auto& t : f.terms)
        if (t.s.real() < pu.remainder_order) add_term_inplace(pu, {t.s, t.k, -t.coeff});
    double worst = 0.0;
    for (const auto& t : pu.terms)
        if (t.s.real() < std::min(target, pu.remainder_order))
            worst = std::max(worst, t.coeff.cwiseAbs().maxCoeff());
    return worst;
}

bool subset(const IndexSet& a, const IndexSet& b) {
    for (const auto& e : a.entries)
        if (!b.contains(e.s, e.k)) return false;
    return true;
}

// 1. Euclidean boundary spectra, quantitative.
void criterion1() {
    double t0 = now_seconds();
    char buf[256];
    DivSpectrumReport one = boundary_spectrum_report(euclid3(), OperatorId::Div1Form, 0.0, 4.0, 4);
    DivSpectrumReport two =
        boundary_spectrum_report(euclid3(), OperatorId::Div2Tensor, 0.0, 4.0, 4);
    bool ok = one.points.size() == 1 && two.points.size() == 2;
    if (ok) {
        ok = std::abs(one.points[0].s - Cplx(2, 0)) < 1e-7 && one.points[0].ord == 1 &&
             std::abs(two.points[0].s - Cplx(2, 0)) < 1e-7 && two.points[0].ord == 1 &&
             std::abs(two.points[1].s - Cplx(3, 0)) < 1e-7 && two.points[1].ord == 1;
    }
    double dt = now_seconds() - t0;
    ok = ok && dt < 5.0;
    std::snprintf(buf, sizeof buf,
                  "Euclidean spectra: 1-forms {(2,0)}, 2-tensors {(2,0),(3,0)} within 1e-7, "
                  "orders exact (%.2fs)",
                  dt);
    report(1, ok, buf);
}

// 2. Sharp-vs-PP* contrast with the constant-mode pairing declared zero.
void criterion2() {
    double t0 = now_seconds();
    char buf[256];
    PhgExpansion empty;
    empty.remainder_order = 6.0;
    BOperator p = mode_reduce(euclid3(), {OperatorId::Div1Form, 1, HarmonicType::Scalar, 3});
    SolveReport pps =
        ppstar_formal_solve(p, 0.0, empty, std::numeric_limits<double>::infinity(), 6.0);
    bool sharp_empty = pps.comparison_realized.empty();
    double rho3 = log_coeff(pps.solution, 3.0, 0);
    bool strict = sharp_empty && !pps.realized.empty();
    for (const auto& e : pps.comparison_realized)
        strict = strict && pps.realized.contains(e.s, e.k);
    double dt = now_seconds() - t0;
    bool ok = sharp_empty && rho3 > 1e-6 && strict && dt < 5.0;
    std::snprintf(buf, sizeof buf,
                  "sharp route realizes nothing, PP* realizes rho^3 family "
                  "(|coeff|=%.3g), strict containment (%.2fs)",
                  rho3, dt);
    report(2, ok, buf);
}

// 3. Log dichotomy for the 2-tensor sharp solve under radial perturbations.
void criterion3() {
    char buf[512];
    PhgExpansion empty;
    empty.remainder_order = 6.0;
    auto run = [&](double a0, double b0) {
        MetricSpec m;
        m.n = 3;
        m.a = {a0};
        m.b = {b0};
        BOperator stacked =
            direct_sum(mode_reduce(m, {OperatorId::Div2Tensor, 1, HarmonicType::Scalar, 3}, 10),
                       mode_reduce(m, {OperatorId::Div2Tensor, 1, HarmonicType::Vector, 3}, 10));
        SolveReport rep = sharp_solve(stacked, empty, 1.9, 6.0);
        return log_coeff(rep.solution, 3.0, 1);
    };
    double generic = run(0.4, -0.3);
    double symmetric = run(0.4, 0.4);
    bool ok_generic = generic > 1e-6;
    bool ok_symmetric = symmetric <= 1e-9;
    std::snprintf(buf, sizeof buf,
                  "log dichotomy: generic |(3,1)|=%.3g (want > 1e-6), symmetric "
                  "|(3,1)|=%.3g (want <= 1e-9); radial perturbations preserve the harmonic "
                  "block decoupling, so the generic half cannot occur in this metric class "
                  "(see the project notes)",
                  generic, symmetric);
    report(3, ok_generic && ok_symmetric, buf);
}

// 4. Radial divergence oracle vs the sharp mode solution.
void criterion4() {
    double t0 = now_seconds();
    char buf[256];
    const int npts = 4001;
    const double rmax = 2.0;
    auto bump = [](double t) {
        double y = t - 1.0;
        return std::abs(y) < 0.8 ? std::exp(-1.0 / (0.64 - y * y)) : 0.0;
    };
    auto dbump = [&bump](double t) {
        double y = t - 1.0;
        if (std::abs(y) >= 0.8) return 0.0;
        double d = 0.64 - y * y;
        return bump(t) * (-2.0 * y / (d * d));
    };
    std::vector<double> r(npts), u(npts), u0(npts);
    for (int i = 0; i < npts; ++i) {
        r[i] = rmax * i / (npts - 1);
        u[i] = bump(r[i]);
        double rr = std::max(r[i], 1e-12);
        u0[i] = -(dbump(rr) + 2.0 * bump(rr) / rr);
    }
    RadialOracleResult nz = radial_divergence_oracle(3, r, u);
    RadialOracleResult zz = radial_divergence_oracle(3, r, u0);
    double inner = 0.0;
    for (double v : zz.f) inner = std::max(inner, std::abs(v));

    BOperator p = mode_reduce(euclid3(), {OperatorId::Div1Form, 0});
    PhgExpansion empty;
    empty.remainder_order = 6.0;
    SolveReport rep = sharp_solve(p, empty, 1.9, 6.0);
    double lead = rep.solution.leading_order();

    double dt = now_seconds() - t0;
    bool ok = !nz.rapid_decay && std::abs(nz.fitted_exponent - 2.0) < 0.05 &&
              zz.rapid_decay && zz.far_field_max <= 1e-10 * inner &&
              std::abs(nz.fitted_exponent - lead) < 0.05 && dt < 10.0;
    std::snprintf(buf, sizeof buf,
                  "radial oracle: slope %.4f (want -2 +- 0.05), zero-moment far field "
                  "%.2g, mode solution leading Re s = %.2f (%.2fs)",
                  -nz.fitted_exponent, zz.far_field_max, lead, dt);
    report(4, ok, buf);
}

// 5. Nondegenerate pairings on random square families with clustered roots.
void criterion5() {
    char buf[256];
    std::mt19937 rng(2024);
    // planted partial multiplicities; degree stays <= 3 (maxk + 1)
    std::vector<std::vector<int>> shapes = {{1}, {2}, {1, 1}, {2, 1}, {2, 2}, {1, 1, 1}};
    int checked = 0, bad = 0;
    for (int trial = 0; trial < 56; ++trial) {
        Cplx z0(0.15 * (trial % 5) - 0.3, 0.1 * (trial % 3));
        const auto& mults = shapes[trial % shapes.size()];
        int size = std::max<int>(2 + static_cast<int>(rng() % 3),
                                 static_cast<int>(mults.size()));
        MellinFamily n = planted_family(rng, size, z0, mults);
        double w = -2.0 + 0.3 * (trial % 9);
        try {
            PairingContext ctx(n, w, z0);  // construction enforces dim equality
            for (int j = 0; j < ctx.order(); ++j) {
                const MatrixXcd& qp = ctx.quotient_basis(j);
                const MatrixXcd& qs = ctx.adjoint_quotient_basis(j);
                if (qp.cols() != qs.cols()) {
                    ++bad;
                    continue;
                }
                if (qp.cols() == 0) continue;
                MatrixXcd b(qs.cols(), qp.cols());
                for (int a = 0; a < qp.cols(); ++a)
                    for (int t = 0; t < qs.cols(); ++t)
                        b(t, a) = pairing_bj(ctx, j, qp.col(a), qs.col(t));
                Eigen::JacobiSVD<MatrixXcd> svd(b);
                if (svd.singularValues()(svd.singularValues().size() - 1) <= 1e-8) ++bad;
            }
            ++checked;
        } catch (const PhgbError&) {
            ++bad;
        }
    }
    std::snprintf(buf, sizeof buf,
                  "pairing theory on %d random families (size <= 4, degree <= 3): "
                  "quotient dims equal, pairing matrices full rank, failures %d",
                  checked, bad);
    report(5, checked >= 50 && bad == 0, buf);
}

// 6. Adjoint identity to 1e-12.
void criterion6() {
    char buf[256];
    std::mt19937 rng(77);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        int rows = 1 + static_cast<int>(rng() % 3);
        int cols = 1 + static_cast<int>(rng() % 3);
        int order = 1 + static_cast<int>(rng() % 3);
        double w = 3.0 * g(rng);
        BOperator p(order, 4, rows, cols, w);
        for (int j = 0; j <= order; ++j)
            for (int t = 0; t <= 2; ++t) p.set_block(j, t, random_matrix(rng, rows, cols));
        BOperator q = adjoint(p);
        MellinFamily np = normal_part(p), nq = normal_part(q);
        for (int t = 0; t < 20; ++t) {
            Cplx z(g(rng), g(rng));
            MatrixXcd lhs = evaluate(nq, std::conj(z) + Cplx(0, w));
            MatrixXcd rhs = evaluate(np, z).adjoint();
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    std::snprintf(buf, sizeof buf,
                  "adjoint identity N(P*, conj z + i w) = N(P,z)^H on 20 operators x 20 "
                  "points: max deviation %.2e",
                  worst);
    report(6, worst <= 1e-12, buf);
}

// 7. Normal-solve contract on 50 random solvable instances.
void criterion7() {
    char buf[256];
    std::mt19937 rng(4096);
    std::vector<std::vector<int>> shapes = {{1}, {2}, {1, 1}, {2, 1}};
    int done = 0, bad = 0;
    double worst = 0.0;
    for (int trial = 0; done < 50; ++trial) {
        Cplx z0(0.2 * (trial % 4) - 0.3, 0.15);
        const auto& mults = shapes[trial % shapes.size()];
        int size = 2 + static_cast<int>(rng() % 2);
        MellinFamily n = planted_family(rng, size, z0, mults);
        double w = -1.5 + 0.35 * (trial % 7);
        PairingContext ctx(n, w, z0);
        int depth = 1 + static_cast<int>(rng() % 3);
        std::vector<VectorXcd> fv;
        for (int d = 0; d < depth; ++d) fv.push_back(random_matrix(rng, size, 1));
        LaurentData f{z0, fv};
        LaurentData u = solve_at_exponent(ctx, f);
        double res = solve_residual(ctx, u, f);
        worst = std::max(worst, res);
        if (res > 1e-10) ++bad;
        if (u.depth() > f.depth() + ctx.order()) ++bad;
        ++done;
    }
    std::snprintf(buf, sizeof buf,
                  "normal solves on %d random instances: worst Laurent residual %.2e, log "
                  "enlargement always <= ord(P*, .), failures %d",
                  done, worst, bad);
    report(7, bad == 0, buf);
}

// 8. Formal-solve residual and containment on the shipped examples.
void criterion8() {
    char buf[256];
    int bad = 0;
    double worst_res = 0.0;
    bool prediction_violated = false;
    auto check = [&](const BOperator& p, const SolveReport& rep, const PhgExpansion& f) {
        double res = residual_below(p, rep.solution, f, rep.target_order);
        worst_res = std::max(worst_res, res);
        if (res > 1e-9) ++bad;
        if (!subset(rep.realized, rep.predicted)) ++bad;
    };
    try {
        PhgExpansion empty;
        empty.remainder_order = 6.0;
        // scalar model operators
        BOperator rdr = BOperator::rho_d_rho();
        PhgExpansion one;
        one.remainder_order = 4.0;
        VectorXcd c1(1);
        c1(0) = 1.0;
        add_term_inplace(one, {Cplx(0, 0), 0, c1});
        check(rdr, formal_solve(rdr, one, 4.0), one);

        BOperator rdr_rho(1, 8, 1, 1, 0.0);
        rdr_rho.set_block(1, 0, MatrixXcd::Ones(1, 1));
        rdr_rho.set_block(0, 1, MatrixXcd::Ones(1, 1));
        check(rdr_rho, formal_solve(rdr_rho, one, 4.0), one);

        // divergence mode systems, Euclidean and perturbed
        MetricSpec pert;
        pert.n = 3;
        pert.a = {0.35};
        pert.b = {-0.25};
        for (const MetricSpec& m : {euclid3(), pert}) {
            for (int l : {0, 1, 2}) {
                BOperator p1 =
                    mode_reduce(m, {OperatorId::Div1Form, l, HarmonicType::Scalar, 3}, 10);
                check(p1, sharp_solve(p1, empty, 1.9, 6.0), empty);
                BOperator p2 =
                    mode_reduce(m, {OperatorId::Div2Tensor, l, HarmonicType::Scalar, 3}, 10);
                check(p2, sharp_solve(p2, empty, 1.9, 6.0), empty);
            }
            BOperator pv =
                mode_reduce(m, {OperatorId::Div2Tensor, 1, HarmonicType::Vector, 3}, 10);
            check(pv, sharp_solve(pv, empty, 1.9, 6.0), empty);
        }
        // PP* comparisons and kernel elements
        BOperator pl1 = mode_reduce(euclid3(), {OperatorId::Div1Form, 1, HarmonicType::Scalar, 3});
        check(pl1, ppstar_formal_solve(pl1, 0.0, empty,
                                       std::numeric_limits<double>::infinity(), 6.0),
              empty);
        BOperator p2t =
            mode_reduce(euclid3(), {OperatorId::Div2Tensor, 1, HarmonicType::Scalar, 3});
        PhgExpansion zerof;
        zerof.remainder_order = 5.0;
        SolveReport ker = kernel_element(p2t, Cplx(0.5, 0), 0, 5.0);
        check(p2t, ker, zerof);
    } catch (const PredictionViolated&) {
        prediction_violated = true;
    } catch (const PhgbError&) {
        ++bad;
    }
    std::snprintf(buf, sizeof buf,
                  "shipped examples: worst sub-target residual %.2e (tol 1e-9), realized "
                  "within predicted everywhere, PredictionViolated fired: %s, failures %d",
                  worst_res, prediction_violated ? "yes" : "no", bad);
    report(8, bad == 0 && !prediction_violated, buf);
}

// 9. Mode vs Cartesian finite differences: convergence and agreement.
void criterion9() {
    char buf[256];
    std::vector<double> radii = {3.0, 4.0, 5.0};
    int bad = 0, done = 0;
    double worst_err = 0.0, worst_order = 99.0;
    struct Case {
        OperatorId op;
        int l;
        HarmonicType type;
    };
    std::vector<Case> cases;
    for (int l = 0; l <= 3; ++l) {
        cases.push_back({OperatorId::LaplacianScalar, l, HarmonicType::Scalar});
        cases.push_back({OperatorId::ExteriorD, l, HarmonicType::Scalar});
        cases.push_back({OperatorId::Div1Form, l, HarmonicType::Scalar});
        cases.push_back({OperatorId::Div2Tensor, l, HarmonicType::Scalar});
    }
    for (int l = 1; l <= 3; ++l) cases.push_back({OperatorId::Div2Tensor, l, HarmonicType::Vector});
    MetricSpec pert;
    pert.n = 3;
    pert.a = {0.35};
    pert.b = {-0.25};
    for (const MetricSpec& metric : {euclid3(), pert}) {
        for (const auto& c : cases) {
            ModeSpec mode{c.op, c.l, c.type, 3};
            BOperator p = mode_reduce(metric, mode, 16);
            std::vector<double> powers;
            for (int i = 0; i < p.cols(); ++i) powers.push_back(2.3 + 0.5 * i);
            std::vector<std::function<double(double)>> profiles;
            for (double s : powers)
                profiles.push_back([s](double r) { return std::pow(r, -s); });
            try {
                CartesianOracleResult oracle =
                    cartesian_apply_oracle(metric, mode, profiles, radii, 4e-3, 3);
                Eigen::MatrixXd ref = mode_apply_power_profiles(p, powers, radii);
                double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-12);
                double e1 = (oracle.outputs[1] - ref).cwiseAbs().maxCoeff() / scale;
                double e2 = (oracle.outputs[2] - ref).cwiseAbs().maxCoeff() / scale;
                double order = std::log2(e1 / e2);
                worst_err = std::max(worst_err, e2);
                worst_order = std::min(worst_order, order);
                if (e2 >= 1e-4 || order < 1.9) ++bad;
                ++done;
            } catch (const PhgbError&) {
                ++bad;
            }
        }
    }
    std::snprintf(buf, sizeof buf,
                  "mode vs Cartesian FD on %d (operator, l<=3, metric) cases: worst relative "
                  "error %.2e (tol 1e-4), worst measured order %.2f (want >= 1.9), failures %d",
                  done, worst_err, worst_order, bad);
    report(9, bad == 0, buf);
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
