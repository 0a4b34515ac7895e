#include "phgb/euclid.hpp"

#include <algorithm>
#include <cmath>

#include "phgb/formal.hpp"
#include "phgb/taylor.hpp"

namespace phgb {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

// -- MetricSpec ----------------------------------------------------------------

bool MetricSpec::euclidean() const {
    auto allzero = [](const std::vector<double>& v) {
        for (double x : v)
            if (x != 0.0) return false;
        return true;
    };
    return allzero(a) && allzero(b);
}

bool MetricSpec::spherically_symmetric_to_subleading() const {
    double a0 = a.empty() ? 0.0 : a[0];
    double b0 = b.empty() ? 0.0 : b[0];
    return a0 == b0;
}

double MetricSpec::a_at(double rho) const {
    double acc = 0.0, p = 1.0;
    for (double c : a) {
        acc += c * p;
        p *= rho;
    }
    return acc;
}

double MetricSpec::b_at(double rho) const {
    double acc = 0.0, p = 1.0;
    for (double c : b) {
        acc += c * p;
        p *= rho;
    }
    return acc;
}

Eigen::Matrix3d MetricSpec::cartesian(const Vector3d& x) const {
    if (n != 3) throw InputError("cartesian metric evaluation implemented for n=3");
    double r = x.norm();
    double rho = 1.0 / r;
    Vector3d w = x / r;
    Matrix3d ww = w * w.transpose();
    return Matrix3d::Identity() + rho * a_at(rho) * ww +
           rho * b_at(rho) * (Matrix3d::Identity() - ww);
}

const char* operator_name(OperatorId id) {
    switch (id) {
        case OperatorId::ExteriorD: return "exterior_d";
        case OperatorId::Div1Form: return "div_1form";
        case OperatorId::Div2Tensor: return "div_2tensor";
        case OperatorId::LaplacianScalar: return "laplacian_scalar";
    }
    return "?";
}

const char* harmonic_name(HarmonicType t) {
    switch (t) {
        case HarmonicType::Scalar: return "scalar";
        case HarmonicType::Vector: return "vector";
        case HarmonicType::Tensor: return "tensor";
    }
    return "?";
}

OperatorId operator_from_name(const std::string& s) {
    if (s == "exterior_d") return OperatorId::ExteriorD;
    if (s == "div_1form") return OperatorId::Div1Form;
    if (s == "div_2tensor") return OperatorId::Div2Tensor;
    if (s == "laplacian_scalar") return OperatorId::LaplacianScalar;
    throw InputError("unknown operator: " + s);
}

HarmonicType harmonic_from_name(const std::string& s) {
    if (s == "scalar") return HarmonicType::Scalar;
    if (s == "vector") return HarmonicType::Vector;
    if (s == "tensor") return HarmonicType::Tensor;
    throw InputError("unknown harmonic type: " + s);
}

// -- admissibility and block dimensions ----------------------------------------

namespace {

void check_mode(const ModeSpec& mode) {
    if (mode.n < 2) throw InadmissibleMode("dimension must be at least 2");
    if (mode.l < 0) throw InadmissibleMode("negative harmonic degree");
    if (mode.type == HarmonicType::Vector) {
        if (mode.l < 1) throw InadmissibleMode("vector harmonics need l >= 1");
        if (mode.n == 2 && mode.l > 1)
            throw InadmissibleMode("the circle carries a single coclosed 1-form family");
    }
    if (mode.type == HarmonicType::Tensor) {
        if (mode.l < 2) throw InadmissibleMode("tensor harmonics need l >= 2");
        if (mode.n < 4)
            throw InadmissibleMode(
                "the sphere S^{n-1} carries no transverse-traceless tensor harmonics for n < 4");
    }
    bool scalar_domain = mode.op == OperatorId::ExteriorD || mode.op == OperatorId::LaplacianScalar;
    if (scalar_domain && mode.type != HarmonicType::Scalar)
        throw InadmissibleMode("scalar-domain operator has only scalar-type modes");
    if (mode.op == OperatorId::Div1Form && mode.type == HarmonicType::Tensor)
        throw InadmissibleMode("1-forms have no tensor-type component");
}

// profile counts for the harmonic blocks of each bundle; m = n-1 is the
// sphere dimension (the traceless Hessian block needs m >= 2)
int one_form_dim(int l, HarmonicType t) {
    if (t == HarmonicType::Scalar) return l == 0 ? 1 : 2;
    if (t == HarmonicType::Vector) return 1;
    return 0;
}

int two_tensor_dim(int l, HarmonicType t, int m) {
    if (t == HarmonicType::Scalar) {
        if (l == 0) return 2;
        return (l >= 2 && m >= 2) ? 4 : 3;
    }
    if (t == HarmonicType::Vector) return (l >= 2 && m >= 2) ? 2 : 1;
    return 1;
}

} // namespace

int mode_input_dim(OperatorId op, int l, HarmonicType type, int n) {
    ModeSpec m{op, l, type, n};
    check_mode(m);
    switch (op) {
        case OperatorId::ExteriorD:
        case OperatorId::LaplacianScalar: return 1;
        case OperatorId::Div1Form: return one_form_dim(l, type);
        case OperatorId::Div2Tensor: return two_tensor_dim(l, type, n - 1);
    }
    return 0;
}

int mode_output_dim(OperatorId op, int l, HarmonicType type, int n) {
    ModeSpec m{op, l, type, n};
    check_mode(m);
    switch (op) {
        case OperatorId::ExteriorD: return one_form_dim(l, type);
        case OperatorId::LaplacianScalar: return 1;
        case OperatorId::Div1Form: return type == HarmonicType::Scalar ? 1 : 0;
        case OperatorId::Div2Tensor: return one_form_dim(l, type);
    }
    return 0;
}

// -- mode reduction -------------------------------------------------------------

namespace {

struct TaylorEnv {
    int m = 2;        // sphere dimension n-1
    double lambda = 0.0, kappa = 0.0, kappa_v = 0.0;
    Taylor alpha, beta, adot, bdot, gb;  // 1/A, 1/B, rho d_rho A, rho d_rho B, r R'/R
};

TaylorEnv make_env(const MetricSpec& metric, int l, int depth) {
    TaylorEnv e;
    e.m = metric.n - 1;
    e.lambda = static_cast<double>(l) * (l + e.m - 1);
    e.kappa = (e.m - 1) * (e.lambda - e.m) / e.m;
    e.kappa_v = e.lambda - e.m;
    Taylor A = Taylor::one_plus_rho(metric.a, depth);
    Taylor B = Taylor::one_plus_rho(metric.b, depth);
    e.alpha = A.reciprocal();
    e.beta = B.reciprocal();
    e.adot = A.dot();
    e.bdot = B.dot();
    e.gb = Taylor::constant(1.0, depth) - e.bdot * e.beta * 0.5;
    return e;
}

/// Accumulate "series(rho) * (rho d_rho)^j" into entry (r, c); the b-operator
/// convention rho D_rho = -i rho d_rho contributes a factor i^j.
void add_series(BOperator& p, int r, int c, int j, const Taylor& series) {
    const Cplx ij = std::pow(Cplx(0, 1), j);
    for (int t = 0; t <= p.taylor_depth(); ++t) {
        if (series[t] == 0.0) continue;
        MatrixXcd blk = p.has_block(j, t) ? p.block(j, t)
                                          : MatrixXcd::Zero(p.rows(), p.cols());
        blk(r, c) += ij * series[t];
        p.set_block(j, t, std::move(blk));
    }
}

} // namespace

BOperator mode_reduce(const MetricSpec& metric, const ModeSpec& mode, int taylor_depth,
                      std::optional<double> weight_override) {
    check_mode(mode);
    ModeSpec m2 = mode;
    m2.n = metric.n;
    const int rows = mode_output_dim(m2.op, m2.l, m2.type, m2.n);
    const int cols = mode_input_dim(m2.op, m2.l, m2.type, m2.n);
    const double w = weight_override.value_or(-static_cast<double>(metric.n));
    const int order = (m2.op == OperatorId::LaplacianScalar) ? 2 : 1;

    TaylorEnv e = make_env(metric, m2.l, taylor_depth);
    const int m = e.m;
    const double lam = e.lambda;
    const double sq2 = std::sqrt(2.0);

    std::string label = std::string(operator_name(m2.op)) + "[n=" + std::to_string(metric.n) +
                        "," + harmonic_name(m2.type) + ",l=" + std::to_string(m2.l) + "]";
    BOperator p(order, taylor_depth, rows, cols, w, label);
    if (rows == 0) return p;

    const Taylor one = Taylor::constant(1.0, taylor_depth);

    switch (m2.op) {
        case OperatorId::LaplacianScalar: {
            // rho^{-2} * (positive Laplacian delta d)
            add_series(p, 0, 0, 2, e.alpha * (-1.0));
            Taylor c1 = e.alpha * static_cast<double>(m - 1) -
                        e.alpha * (e.bdot * e.beta * static_cast<double>(m) -
                                   e.adot * e.alpha) * 0.5;
            add_series(p, 0, 0, 1, c1);
            add_series(p, 0, 0, 0, e.beta * lam);
            break;
        }
        case OperatorId::ExteriorD: {
            // rho^{-1} d on functions; metric-independent in these bases
            add_series(p, 0, 0, 1, one * (-1.0));
            if (m2.l >= 1) add_series(p, 1, 0, 0, one * std::sqrt(lam));
            break;
        }
        case OperatorId::Div1Form: {
            if (m2.type == HarmonicType::Vector) break;  // identically zero
            add_series(p, 0, 0, 1, e.alpha);
            add_series(p, 0, 0, 0,
                       e.adot * e.alpha * e.alpha * (-0.5) -
                           e.alpha * e.gb * static_cast<double>(m));
            if (m2.l >= 1) add_series(p, 0, 1, 0, e.beta * std::sqrt(lam));
            break;
        }
        case OperatorId::Div2Tensor: {
            if (m2.type == HarmonicType::Tensor) break;  // identically zero
            if (m2.type == HarmonicType::Scalar) {
                // columns: f1 (Y dr^2), [f2 (r sym dr dY)], f3 (r^2 Y gamma), [f4 (r^2 Hhat)]
                const int c1 = 0;
                const int c2 = (m2.l >= 1) ? 1 : -1;
                const int c3 = (m2.l >= 1) ? 2 : 1;
                const int c4 = (m2.l >= 2 && m >= 2) ? 3 : -1;
                add_series(p, 0, c1, 1, e.alpha);
                add_series(p, 0, c1, 0,
                           e.adot * e.alpha * e.alpha * (-1.0) -
                               e.alpha * e.gb * static_cast<double>(m));
                if (c2 >= 0) add_series(p, 0, c2, 0, e.beta * std::sqrt(lam / 2.0));
                add_series(p, 0, c3, 0, e.beta * e.gb * std::sqrt(static_cast<double>(m)));
                if (m2.l >= 1) {
                    add_series(p, 1, c2, 1, e.alpha * (1.0 / sq2));
                    add_series(p, 1, c2, 0,
                               (e.alpha * (-1.0) - e.adot * e.alpha * e.alpha * 0.5 -
                                e.alpha * e.gb * static_cast<double>(m)) * (1.0 / sq2));
                    add_series(p, 1, c3, 0, e.beta * (-std::sqrt(lam / m)));
                    if (c4 >= 0) add_series(p, 1, c4, 0, e.beta * std::sqrt(e.kappa));
                }
            } else {  // vector type
                add_series(p, 0, 0, 1, e.alpha * (1.0 / sq2));
                add_series(p, 0, 0, 0,
                           (e.alpha * (-1.0) - e.adot * e.alpha * e.alpha * 0.5 -
                            e.alpha * e.gb * static_cast<double>(m)) * (1.0 / sq2));
                if (m2.l >= 2 && m >= 2)
                    add_series(p, 0, 1, 0, e.beta * std::sqrt(e.kappa_v / 2.0));
            }
            break;
        }
    }
    return p;
}

// -- spectrum aggregation --------------------------------------------------------

DivSpectrumReport boundary_spectrum_report(const MetricSpec& metric, OperatorId op,
                                           double re_min, double re_max, int lmax) {
    if (op == OperatorId::ExteriorD)
        throw InputError(
            "exterior_d is overdetermined: its adjoint blocks are underdetermined, "
            "ord(P*, .) is infinite and the surjective spectrum is undefined");
    DivSpectrumReport rep;
    rep.re_min = re_min;
    rep.re_max = re_max;
    rep.lmax = lmax;

    std::vector<std::pair<HarmonicType, int>> modes;
    for (int l = 0; l <= lmax; ++l) modes.push_back({HarmonicType::Scalar, l});
    if (op == OperatorId::Div1Form || op == OperatorId::Div2Tensor)
        for (int l = 1; l <= lmax; ++l) modes.push_back({HarmonicType::Vector, l});

    for (const auto& [type, l] : modes) {
        ModeSpec mode{op, l, type, metric.n};
        try {
            check_mode(mode);
        } catch (const InadmissibleMode&) {
            continue;
        }
        if (mode_output_dim(op, l, type, metric.n) == 0) continue;
        BOperator p = mode_reduce(metric, mode, 2);
        OrdFunction ord = make_ord_function(p);
        for (const Cplx& s : ord.singular_exponents(re_min, re_max)) {
            SingularChains chains = singular_chains(ord.adjoint(), ord.mellin_point(s), 6);
            if (!chains.resolved() || chains.ord == 0) continue;
            ModeSpectrumPoint pt;
            pt.s = s;
            pt.ord = chains.ord;
            pt.quotient_dims.assign(chains.lead_dims.begin(),
                                    chains.lead_dims.begin() + chains.ord);
            pt.l = l;
            pt.type = type;
            rep.points.push_back(pt);
        }
    }
    std::sort(rep.points.begin(), rep.points.end(),
              [](const ModeSpectrumPoint& a, const ModeSpectrumPoint& b) {
                  if (a.s.real() != b.s.real()) return a.s.real() < b.s.real();
                  if (a.s.imag() != b.s.imag()) return a.s.imag() < b.s.imag();
                  return a.l < b.l;
              });
    return rep;
}

// -- radial oracle ----------------------------------------------------------------

RadialOracleResult radial_divergence_oracle(int n, const std::vector<double>& r,
                                            const std::vector<double>& u) {
    if (n != 3) throw InputError("radial divergence oracle implemented for n=3");
    if (r.size() != u.size() || r.size() < 5) throw InputError("bad radial samples");

    RadialOracleResult res;
    res.r = r;
    const int npts = static_cast<int>(r.size());

    // cumulative Simpson for I(r) = int_0^r t^2 u dt (grid assumed uniform)
    std::vector<double> integrand(npts);
    for (int i = 0; i < npts; ++i) integrand[i] = r[i] * r[i] * u[i];
    std::vector<double> cum(npts, 0.0);
    const double h = r[1] - r[0];
    for (int i = 1; i < npts; ++i) {
        if (i >= 2) {
            cum[i] = cum[i - 2] + h / 3.0 * (integrand[i - 2] + 4.0 * integrand[i - 1] +
                                             integrand[i]);
        } else {
            // quadratic through the first three points, integrated over [r0, r1]
            cum[i] = cum[i - 1] + h / 12.0 * (5.0 * integrand[i - 1] + 8.0 * integrand[i] -
                                              integrand[i + 1]);
        }
    }
    res.f.resize(npts);
    for (int i = 0; i < npts; ++i)
        res.f[i] = (r[i] > 0.0) ? -cum[i] / (r[i] * r[i]) : 0.0;
    res.total_integral = cum[npts - 1];

    double inner_scale = 0.0;
    for (double v : res.f) inner_scale = std::max(inner_scale, std::abs(v));
    if (inner_scale == 0.0) inner_scale = 1.0;

    // slope fit on [10 R, 1000 R] where f = -I_tot / r^2 exactly
    const double rsup = r.back();
    const int nfit = 25;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double fmax = 0.0;
    int used = 0;
    for (int i = 0; i < nfit; ++i) {
        double rr = 10.0 * rsup * std::pow(100.0, static_cast<double>(i) / (nfit - 1));
        double fv = -res.total_integral / (rr * rr);
        fmax = std::max(fmax, std::abs(fv));
        if (std::abs(fv) < 1e-300) continue;
        double x = std::log(rr), y = std::log(std::abs(fv));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++used;
    }
    res.far_field_max = fmax;
    if (fmax <= 1e-10 * inner_scale || used < 2) {
        res.rapid_decay = true;
        res.fitted_exponent = std::numeric_limits<double>::infinity();
    } else {
        double slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
        res.fitted_exponent = -slope;
        res.rapid_decay = false;
    }
    return res;
}

// -- harmonics on S^2 and Cartesian basis fields ----------------------------------

namespace {

struct Harmonic3 {
    int l = 0;
    double c = 1.0;  // L^2(S^2) normalization of c * p / r^l
    std::function<double(const Vector3d&)> p;
    std::function<Vector3d(const Vector3d&)> grad;
    std::function<Matrix3d(const Vector3d&)> hess;
};

Harmonic3 scalar_harmonic3(int l) {
    Harmonic3 h;
    h.l = l;
    switch (l) {
        case 0:
            h.c = 1.0 / std::sqrt(4.0 * M_PI);
            h.p = [](const Vector3d&) { return 1.0; };
            h.grad = [](const Vector3d&) { return Vector3d::Zero().eval(); };
            h.hess = [](const Vector3d&) { return Matrix3d::Zero().eval(); };
            break;
        case 1:
            h.c = std::sqrt(3.0 / (4.0 * M_PI));
            h.p = [](const Vector3d& x) { return x(2); };
            h.grad = [](const Vector3d&) { return Vector3d(0, 0, 1); };
            h.hess = [](const Vector3d&) { return Matrix3d::Zero().eval(); };
            break;
        case 2:
            h.c = std::sqrt(15.0 / (4.0 * M_PI));
            h.p = [](const Vector3d& x) { return x(0) * x(1); };
            h.grad = [](const Vector3d& x) { return Vector3d(x(1), x(0), 0); };
            h.hess = [](const Vector3d&) {
                Matrix3d m = Matrix3d::Zero();
                m(0, 1) = m(1, 0) = 1.0;
                return m;
            };
            break;
        case 3:
            h.c = std::sqrt(105.0 / (4.0 * M_PI));
            h.p = [](const Vector3d& x) { return x(0) * x(1) * x(2); };
            h.grad = [](const Vector3d& x) {
                return Vector3d(x(1) * x(2), x(0) * x(2), x(0) * x(1));
            };
            h.hess = [](const Vector3d& x) {
                Matrix3d m = Matrix3d::Zero();
                m(0, 1) = m(1, 0) = x(2);
                m(0, 2) = m(2, 0) = x(1);
                m(1, 2) = m(2, 1) = x(0);
                return m;
            };
            break;
        default: throw InputError("scalar harmonics implemented for l <= 3");
    }
    return h;
}

struct HarmonicFields {
    // all 0-homogeneous or O(1) evaluations at a point x != 0
    std::function<double(const Vector3d&)> Y;        // Y(x/|x|)
    std::function<Vector3d(const Vector3d&)> rdY;    // r * grad(Y_ext)
    std::function<Matrix3d(const Vector3d&)> r2ddY;  // r^2 * hess(Y_ext)
    std::function<Vector3d(const Vector3d&)> V;      // unit rotational harmonic
    std::function<Matrix3d(const Vector3d&)> rdV;    // r * grad(V components)
};

HarmonicFields make_fields(int l, int m) {
    Harmonic3 h = scalar_harmonic3(l);
    double lam = static_cast<double>(l) * (l + m - 1);
    HarmonicFields f;
    f.Y = [h, l](const Vector3d& x) {
        double r = x.norm();
        return h.c * h.p(x) / std::pow(r, l);
    };
    f.rdY = [h, l](const Vector3d& x) {
        double r = x.norm();
        Vector3d w = x / r;
        return (h.c * (h.grad(x) * std::pow(r, 1 - l) -
                       static_cast<double>(l) * h.p(x) * w * std::pow(r, -l)))
            .eval();
    };
    f.r2ddY = [h, l](const Vector3d& x) {
        double r = x.norm();
        double rl = std::pow(r, l);
        Matrix3d out = h.hess(x) * (r * r / rl);
        Vector3d g = h.grad(x);
        out -= static_cast<double>(l) / rl * (g * x.transpose() + x * g.transpose());
        out -= static_cast<double>(l) * h.p(x) / rl * Matrix3d::Identity();
        out += static_cast<double>(l * (l + 2)) * h.p(x) / (rl * r * r) * x * x.transpose();
        return (h.c * out).eval();
    };
    if (l >= 1) {
        double norm = h.c / std::sqrt(lam);
        f.V = [h, l, norm](const Vector3d& x) {
            double r = x.norm();
            Vector3d lp = x.cross(h.grad(x));
            return (norm * lp / std::pow(r, l)).eval();
        };
        f.rdV = [h, l, norm](const Vector3d& x) {
            auto eps = [](int i, int j, int k) {
                return 0.5 * (i - j) * (j - k) * (k - i);
            };
            double r = x.norm();
            double rl = std::pow(r, l);
            Matrix3d hess = h.hess(x);
            Vector3d g = h.grad(x);
            Vector3d lp = x.cross(g);
            Matrix3d out;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    // d/dx_j of eps_{ikq} x_k d_q p, then the r^{-l} correction
                    double v = 0.0;
                    for (int k = 0; k < 3; ++k)
                        for (int q = 0; q < 3; ++q) {
                            double e = eps(i, k, q);
                            if (e == 0.0) continue;
                            v += e * ((j == k ? g(q) : 0.0) + x(k) * hess(q, j));
                        }
                    out(i, j) = norm * (v / rl - l * lp(i) * x(j) / (rl * r * r));
                }
            return (out * r).eval();
        };
    }
    return f;
}

using BasisFn = std::function<VectorXd(const Vector3d&)>;

Matrix3d tangential_projector(const Vector3d& x) {
    Vector3d w = x.normalized();
    return Matrix3d::Identity() - w * w.transpose();
}

VectorXd flatten(const Matrix3d& m) {
    VectorXd v(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) v(3 * i + j) = m(i, j);
    return v;
}

/// Orthonormal basis fields (Cartesian components) of the (l,type) block of a
/// bundle: functions (1 component), 1-forms (3), symmetric 2-tensors (9).
///
/// Normalization table (L^2 of the unit sphere, round measure), with Y a unit
/// scalar harmonic, V = (x cross grad P)/sqrt(lambda) the unit rotational
/// harmonic, lambda = l(l+m-1), kappa = (m-1)(lambda-m)/m, kappa_v = lambda-m:
///   functions:  Y                                   norm 1
///   1-forms:    Y dr                                norm 1
///               r dY                                norm sqrt(lambda)
///               r V                                 norm 1
///   2-tensors:  Y dr^2                              norm 1
///               r (dr dY + dY dr)                   norm sqrt(2 lambda)
///               r^2 Y gamma                         norm sqrt(m)
///               r^2 Hhat, Hhat = DDY + (lambda/m) gamma Y   norm sqrt(lambda kappa)
///               r (dr V + V dr)                     norm sqrt(2)
///               r^2 (DV + DV^T)                     norm sqrt(2 kappa_v)
/// The same table fixes the mode_reduce profile coordinates.
std::vector<BasisFn> bundle_basis(int bundle_rank, int l, HarmonicType type, int m) {
    HarmonicFields f = make_fields(l, m);
    double lam = static_cast<double>(l) * (l + m - 1);
    double kap = (m - 1) * (lam - m) / m;
    double kap_v = lam - m;
    std::vector<BasisFn> basis;

    if (bundle_rank == 0) {
        if (type != HarmonicType::Scalar) return {};
        basis.push_back([f](const Vector3d& x) {
            VectorXd v(1);
            v(0) = f.Y(x);
            return v;
        });
        return basis;
    }
    if (bundle_rank == 1) {
        if (type == HarmonicType::Scalar) {
            basis.push_back([f](const Vector3d& x) {
                Vector3d w = x.normalized();
                return VectorXd((f.Y(x) * w).eval());
            });
            if (l >= 1)
                basis.push_back([f, lam](const Vector3d& x) {
                    return VectorXd((f.rdY(x) / std::sqrt(lam)).eval());
                });
        } else if (type == HarmonicType::Vector && l >= 1) {
            basis.push_back([f](const Vector3d& x) { return VectorXd(f.V(x)); });
        }
        return basis;
    }
    // symmetric 2-tensors
    if (type == HarmonicType::Scalar) {
        basis.push_back([f](const Vector3d& x) {
            Vector3d w = x.normalized();
            return flatten(f.Y(x) * w * w.transpose());
        });
        if (l >= 1)
            basis.push_back([f, lam](const Vector3d& x) {
                Vector3d w = x.normalized();
                Vector3d g = f.rdY(x);
                Matrix3d t = (w * g.transpose() + g * w.transpose()) / std::sqrt(2.0 * lam);
                return flatten(t);
            });
        basis.push_back([f, m](const Vector3d& x) {
            return flatten(f.Y(x) * tangential_projector(x) / std::sqrt(static_cast<double>(m)));
        });
        if (l >= 2)
            basis.push_back([f, lam, kap, m](const Vector3d& x) {
                Matrix3d pi = tangential_projector(x);
                Matrix3d hcov = pi * f.r2ddY(x) * pi;
                Matrix3d t = (hcov + (lam / m) * f.Y(x) * pi) / std::sqrt(lam * kap);
                return flatten(t);
            });
    } else if (type == HarmonicType::Vector && l >= 1) {
        basis.push_back([f](const Vector3d& x) {
            Vector3d w = x.normalized();
            Vector3d v = f.V(x);
            return flatten(((w * v.transpose() + v * w.transpose()) / std::sqrt(2.0)).eval());
        });
        if (l >= 2)
            basis.push_back([f, kap_v](const Vector3d& x) {
                Matrix3d pi = tangential_projector(x);
                Matrix3d dv = f.rdV(x);
                Matrix3d w = pi * (dv + dv.transpose()) * pi;
                return flatten((w / std::sqrt(2.0 * kap_v)).eval());
            });
    }
    return basis;
}

int bundle_rank_of_input(OperatorId op) {
    switch (op) {
        case OperatorId::ExteriorD:
        case OperatorId::LaplacianScalar: return 0;
        case OperatorId::Div1Form: return 1;
        case OperatorId::Div2Tensor: return 2;
    }
    return 0;
}

int bundle_rank_of_output(OperatorId op) {
    switch (op) {
        case OperatorId::ExteriorD: return 1;
        case OperatorId::LaplacianScalar: return 0;
        case OperatorId::Div1Form: return 0;
        case OperatorId::Div2Tensor: return 1;
    }
    return 0;
}

// -- finite-difference geometric operators ----------------------------------------

using FieldFn = std::function<VectorXd(const Vector3d&)>;

struct FdGeometry {
    const MetricSpec* metric;
    double h;

    Matrix3d g(const Vector3d& x) const { return metric->cartesian(x); }
    Matrix3d ginv(const Vector3d& x) const { return g(x).inverse(); }
    double sqrtg(const Vector3d& x) const { return std::sqrt(g(x).determinant()); }

    Matrix3d dg(int i, const Vector3d& x) const {
        Vector3d e = Vector3d::Zero();
        e(i) = h;
        return (g(x + e) - g(x - e)) / (2.0 * h);
    }

    /// Christoffel symbols Gamma^k_{ij} by central differences of the metric.
    std::array<Matrix3d, 3> christoffel(const Vector3d& x) const {
        std::array<Matrix3d, 3> dgs = {dg(0, x), dg(1, x), dg(2, x)};
        Matrix3d gi = ginv(x);
        std::array<Matrix3d, 3> gam;
        for (int k = 0; k < 3; ++k) gam[k] = Matrix3d::Zero();
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double acc = 0.0;
                    for (int l = 0; l < 3; ++l)
                        acc += gi(k, l) * (dgs[i](l, j) + dgs[j](l, i) - dgs[l](i, j));
                    gam[k](i, j) = 0.5 * acc;
                }
        return gam;
    }

    VectorXd dfield(const FieldFn& u, int i, const Vector3d& x) const {
        Vector3d e = Vector3d::Zero();
        e(i) = h;
        return (u(x + e) - u(x - e)) / (2.0 * h);
    }
};

VectorXd apply_geometric_fd(const MetricSpec& metric, OperatorId op, const FieldFn& field,
                            const Vector3d& x, double h) {
    FdGeometry geo{&metric, h};
    switch (op) {
        case OperatorId::ExteriorD: {
            VectorXd out(3);
            for (int i = 0; i < 3; ++i) out(i) = geo.dfield(field, i, x)(0);
            return out;
        }
        case OperatorId::LaplacianScalar: {
            // positive Laplacian: -(1/sqrt g) d_i (sqrt g g^{ij} d_j u)
            auto flux = [&](const Vector3d& y) {
                Vector3d gradu;
                for (int j = 0; j < 3; ++j) gradu(j) = geo.dfield(field, j, y)(0);
                return (geo.sqrtg(y) * (geo.ginv(y) * gradu)).eval();
            };
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) {
                Vector3d e = Vector3d::Zero();
                e(i) = h;
                acc += (flux(x + e)(i) - flux(x - e)(i)) / (2.0 * h);
            }
            VectorXd out(1);
            out(0) = -acc / geo.sqrtg(x);
            return out;
        }
        case OperatorId::Div1Form: {
            Matrix3d gi = geo.ginv(x);
            auto gam = geo.christoffel(x);
            VectorXd w = field(x);
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) {
                VectorXd dwi = geo.dfield(field, i, x);
                for (int j = 0; j < 3; ++j) {
                    double cov = dwi(j);
                    for (int k = 0; k < 3; ++k) cov -= gam[k](i, j) * w(k);
                    acc += gi(i, j) * cov;
                }
            }
            VectorXd out(1);
            out(0) = -acc;
            return out;
        }
        case OperatorId::Div2Tensor: {
            Matrix3d gi = geo.ginv(x);
            auto gam = geo.christoffel(x);
            VectorXd hflat = field(x);
            auto at = [](const VectorXd& v, int i, int j) { return v(3 * i + j); };
            std::array<VectorXd, 3> dh;
            for (int i = 0; i < 3; ++i) dh[i] = geo.dfield(field, i, x);
            VectorXd out(3);
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 3; ++j)
                    for (int k = 0; k < 3; ++k) {
                        double cov = at(dh[j], k, c);
                        for (int l = 0; l < 3; ++l) {
                            cov -= gam[l](j, k) * at(hflat, l, c);
                            cov -= gam[l](j, c) * at(hflat, k, l);
                        }
                        acc += gi(j, k) * cov;
                    }
                out(c) = -acc;
            }
            return out;
        }
    }
    throw InputError("unknown operator");
}

std::vector<Vector3d> fibonacci_sphere(int k) {
    std::vector<Vector3d> pts;
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < k; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / k;
        double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = ga * i;
        pts.emplace_back(rr * std::cos(phi), rr * std::sin(phi), z);
    }
    return pts;
}

} // namespace

CartesianOracleResult cartesian_apply_oracle(
    const MetricSpec& metric, const ModeSpec& mode,
    const std::vector<std::function<double(double)>>& profiles,
    const std::vector<double>& radii, double h0, int levels, double self_check_tol) {
    if (metric.n != 3) throw InputError("cartesian oracle implemented for n=3");
    check_mode(mode);
    const int m = metric.n - 1;
    const int order = (mode.op == OperatorId::LaplacianScalar) ? 2 : 1;

    std::vector<BasisFn> in_basis =
        bundle_basis(bundle_rank_of_input(mode.op), mode.l, mode.type, m);
    int out_rank = bundle_rank_of_output(mode.op);
    std::vector<BasisFn> out_basis;
    if (mode_output_dim(mode.op, mode.l, mode.type, metric.n) > 0)
        out_basis = bundle_basis(out_rank, mode.l, mode.type, m);
    if (profiles.size() != in_basis.size())
        throw InputError("need one profile per input basis element");

    FieldFn field = [&](const Vector3d& x) {
        double r = x.norm();
        VectorXd acc = VectorXd::Zero(in_basis.empty() ? 1 : in_basis[0](x).size());
        for (size_t i = 0; i < in_basis.size(); ++i) acc += profiles[i](r) * in_basis[i](x);
        return acc;
    };

    const int ncomp = out_rank == 0 ? 1 : (out_rank == 1 ? 3 : 9);
    const int outdim = static_cast<int>(out_basis.size());
    std::vector<Vector3d> sphere = fibonacci_sphere(48);

    CartesianOracleResult res;
    res.radii = radii;
    res.h0 = h0;
    for (int lev = 0; lev < levels; ++lev) {
        double h = h0 / std::pow(2.0, lev);
        MatrixXd outs(static_cast<int>(radii.size()), std::max(outdim, 0));
        double worst_fit = 0.0;
        for (size_t jr = 0; jr < radii.size(); ++jr) {
            double r = radii[jr];
            MatrixXd a(static_cast<int>(sphere.size()) * ncomp, outdim);
            VectorXd b(static_cast<int>(sphere.size()) * ncomp);
            for (size_t kp = 0; kp < sphere.size(); ++kp) {
                Vector3d x = r * sphere[kp];
                VectorXd val = apply_geometric_fd(metric, mode.op, field, x, h * r);
                val *= std::pow(r, order);
                for (int c = 0; c < ncomp; ++c) {
                    b(kp * ncomp + c) = val(c);
                    for (int o = 0; o < outdim; ++o) a(kp * ncomp + c, o) = out_basis[o](x)(c);
                }
            }
            double bscale = std::max(b.cwiseAbs().maxCoeff(), 1e-30);
            if (outdim > 0) {
                VectorXd coef = a.colPivHouseholderQr().solve(b);
                outs.row(jr) = coef.transpose();
                worst_fit = std::max(worst_fit, (a * coef - b).norm() / (bscale * std::sqrt(static_cast<double>(b.size()))));
            } else {
                worst_fit = std::max(worst_fit, bscale);
            }
        }
        res.outputs.push_back(outs);
        res.fit_residual.push_back(worst_fit);
    }

    if (levels >= 2 && outdim > 0) {
        const MatrixXd& fine = res.outputs[levels - 1];
        const MatrixXd& coarse = res.outputs[levels - 2];
        double scale = std::max(fine.cwiseAbs().maxCoeff(), 1e-30);
        if ((fine - coarse).cwiseAbs().maxCoeff() / scale > self_check_tol)
            throw GridTooCoarse("finite-difference levels disagree beyond tolerance");
    }
    return res;
}

Eigen::MatrixXd mode_apply_power_profiles(const BOperator& p, const std::vector<double>& s_in,
                                          const std::vector<double>& radii) {
    if (static_cast<int>(s_in.size()) != p.cols())
        throw DimensionMismatch("one input power per operator column");
    PhgExpansion u;
    double smin = 1e300;
    for (double s : s_in) smin = std::min(smin, s);
    u.remainder_order = smin + p.taylor_depth() + 1;
    for (int i = 0; i < p.cols(); ++i) {
        VectorXcd e = VectorXcd::Zero(p.cols());
        e(i) = 1.0;
        add_term_inplace(u, {Cplx(s_in[i], 0.0), 0, e});
    }
    PhgExpansion out = apply_to_expansion(p, u);

    MatrixXd vals(static_cast<int>(radii.size()), p.rows());
    vals.setZero();
    for (size_t jr = 0; jr < radii.size(); ++jr) {
        double rho = 1.0 / radii[jr];
        for (const auto& t : out.terms) {
            double mag = std::pow(rho, t.s.real()) * std::pow(std::log(rho), t.k);
            for (int o = 0; o < p.rows(); ++o) vals(jr, o) += (t.coeff(o) * mag).real();
        }
    }
    return vals;
}

} // namespace phgb
