// Batch CLI over the polyhomogeneous b-calculus library: boundary spectra,
// formal solves, PP* comparisons, kernel elements, and the asymptotically
// Euclidean drivers with their numerical oracles.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phgb/boperator.hpp"
#include "phgb/euclid.hpp"
#include "phgb/formal.hpp"
#include "phgb/io.hpp"

using namespace phgb;

namespace {

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << "\n";
    } else {
        write_text_file(out_path, text);
    }
}

struct NamedOperator {
    std::string name = "";
    int n = 3;
    int l = 0;
    std::string type = "scalar";
    std::string metric_path;
    std::optional<double> weight;
    int taylor_depth = 8;
};

MetricSpec load_metric(const std::string& path, int n) {
    if (path.empty()) {
        MetricSpec m;
        m.n = n;
        return m;
    }
    return metric_from_json(load_json_file(path));
}

BOperator resolve_operator(const std::string& op_path, const NamedOperator& named) {
    if (!op_path.empty()) return boperator_from_json(load_json_file(op_path));
    if (named.name.empty())
        throw InputError("provide --op FILE or a named operator via --operator");
    MetricSpec metric = load_metric(named.metric_path, named.n);
    ModeSpec mode{operator_from_name(named.name), named.l, harmonic_from_name(named.type),
                  metric.n};
    return mode_reduce(metric, mode, named.taylor_depth, named.weight);
}

std::string report_text(const SolveReport& rep, const std::string& format) {
    if (format == "csv") return solve_report_csv(rep);
    return to_json(rep).dump(2) + "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotic expansions for totally characteristic operators"};
    app.require_subcommand(1);

    std::string op_path, rhs_path, out_path, metric_path, format = "json";
    double target = 8.0, alpha_coker = std::numeric_limits<double>::infinity();
    double alpha = 1.0;
    double strip_a = -4.0, strip_b = 4.0;
    NamedOperator named;
    int lmax = 4;
    double s0_re = 0.0, s0_im = 0.0;
    int kpow = 0;
    std::string route = "sharp", moment = "nonzero";
    double tol_rank = Tol::rank_rel, tol_root = Tol::root_cluster;

    app.add_option("--tol-rank", tol_rank, "SVD rank threshold (relative)")
        ->capture_default_str();
    app.add_option("--tol-root", tol_root, "root cluster merge radius")->capture_default_str();

    auto add_named = [&](CLI::App* cmd) {
        cmd->add_option("--operator", named.name,
                        "named operator: exterior_d, div_1form, div_2tensor, laplacian_scalar");
        cmd->add_option("--n", named.n, "space dimension")->capture_default_str();
        cmd->add_option("--l", named.l, "harmonic degree")->capture_default_str();
        cmd->add_option("--type", named.type, "harmonic type: scalar, vector, tensor")
            ->capture_default_str();
        cmd->add_option("--metric", named.metric_path, "metric JSON file");
        cmd->add_option("--weight", [&](const std::vector<std::string>& v) {
            named.weight = std::stod(v[0]);
            return true;
        }, "density weight override (default -n)");
        cmd->add_option("--depth", named.taylor_depth, "Taylor depth")->capture_default_str();
    };

    CLI::App* spec = app.add_subcommand("spec", "indicial roots and order report");
    spec->add_option("--op", op_path, "operator JSON file");
    add_named(spec);
    spec->add_option("--strip", [&](const std::vector<std::string>& v) {
        strip_a = std::stod(v[0]);
        strip_b = std::stod(v[1]);
        return true;
    }, "exponent window Re s in (A, B)")->expected(2);
    spec->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* solve = app.add_subcommand("solve", "formal or sharp solve");
    solve->add_option("--op", op_path, "operator JSON file");
    add_named(solve);
    solve->add_option("--rhs", rhs_path, "right-hand side expansion JSON file");
    solve->add_option("--target", target, "target order")->capture_default_str();
    solve->add_option("--alpha-coker", alpha_coker,
                      "orthogonality threshold (default +inf: sharp solve inserts nothing)");
    solve->add_option("--out", out_path, "output path");
    solve->add_option("--format", format, "json or csv")->capture_default_str();

    CLI::App* ppstar = app.add_subcommand("ppstar", "PP* comparison run");
    ppstar->add_option("--op", op_path, "operator JSON file");
    add_named(ppstar);
    ppstar->add_option("--rhs", rhs_path, "right-hand side expansion JSON file");
    ppstar->add_option("--alpha", alpha, "conjugation weight")->capture_default_str();
    ppstar->add_option("--target", target, "target order")->capture_default_str();
    ppstar->add_option("--alpha-coker", alpha_coker, "orthogonality threshold");
    ppstar->add_option("--out", out_path, "output path");
    ppstar->add_option("--format", format, "json or csv")->capture_default_str();

    CLI::App* kernel = app.add_subcommand("kernel", "formal kernel element");
    kernel->add_option("--op", op_path, "operator JSON file");
    add_named(kernel);
    kernel->add_option("--s0-re", s0_re, "leading exponent, real part")->required();
    kernel->add_option("--s0-im", s0_im, "leading exponent, imaginary part");
    kernel->add_option("--k", kpow, "leading log power")->capture_default_str();
    kernel->add_option("--target", target, "target order")->capture_default_str();
    kernel->add_option("--out", out_path, "output path");
    kernel->add_option("--format", format, "json or csv")->capture_default_str();

    CLI::App* divspec = app.add_subcommand("divspec", "aggregated boundary spectrum");
    divspec->add_option("--n", named.n, "space dimension")->capture_default_str();
    divspec->add_option("--operator", named.name, "operator name")->required();
    divspec->add_option("--lmax", lmax, "largest harmonic degree")->capture_default_str();
    divspec->add_option("--metric", metric_path, "metric JSON file");
    divspec->add_option("--strip", [&](const std::vector<std::string>& v) {
        strip_a = std::stod(v[0]);
        strip_b = std::stod(v[1]);
        return true;
    }, "exponent window Re s in (A, B)")->expected(2);
    divspec->add_option("--out", out_path, "output path");
    divspec->add_option("--format", format, "json or csv")->capture_default_str();

    CLI::App* divsolve = app.add_subcommand("divsolve", "sharp or PP* solve of a mode system");
    divsolve->add_option("--n", named.n, "space dimension")->capture_default_str();
    divsolve->add_option("--operator", named.name, "operator name")->required();
    divsolve->add_option("--l", named.l, "harmonic degree")->capture_default_str();
    divsolve->add_option("--type", named.type, "harmonic type")->capture_default_str();
    divsolve->add_option("--metric", metric_path, "metric JSON file");
    divsolve->add_option("--rhs", rhs_path, "right-hand side expansion JSON file");
    divsolve->add_option("--route", route, "sharp or ppstar")->capture_default_str();
    divsolve->add_option("--alpha", alpha, "PP* conjugation weight")->capture_default_str();
    divsolve->add_option("--alpha-coker", alpha_coker, "orthogonality threshold");
    divsolve->add_option("--target", target, "target order")->capture_default_str();
    divsolve->add_option("--depth", named.taylor_depth, "Taylor depth")->capture_default_str();
    divsolve->add_option("--out", out_path, "output path");
    divsolve->add_option("--format", format, "json or csv")->capture_default_str();

    CLI::App* oracle = app.add_subcommand("oracle", "radial divergence oracle");
    oracle->add_option("--n", named.n, "space dimension")->capture_default_str();
    oracle->add_option("--moment", moment, "nonzero or zero total integral")
        ->capture_default_str();
    oracle->add_option("--out", out_path, "output path");
    oracle->add_option("--format", format, "json or csv")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    Tol::rank_rel = tol_rank;
    Tol::root_cluster = tol_root;

    // default target: leading order of the data plus the Taylor depth default
    auto effective_target = [&](const CLI::App* cmd, const PhgExpansion& f, double base) {
        if (cmd->count("--target")) return target;
        return (f.empty() ? base : f.leading_order()) + 8.0;
    };

    try {
        if (spec->parsed()) {
            BOperator p = resolve_operator(op_path, named);
            SpectrumReport rep = spectrum_report(p, strip_a, strip_b);
            emit(out_path, to_json(rep).dump(2) + "\n");
        } else if (solve->parsed()) {
            BOperator p = resolve_operator(op_path, named);
            PhgExpansion f;
            f.remainder_order = target;
            if (!rhs_path.empty()) f = expansion_from_json(load_json_file(rhs_path));
            double tgt = effective_target(solve, f, 0.0);
            SolveReport rep = std::isfinite(alpha_coker)
                                  ? sharp_solve(p, f, alpha_coker, tgt)
                                  : formal_solve(p, f, tgt);
            emit(out_path, report_text(rep, format));
        } else if (ppstar->parsed()) {
            BOperator p = resolve_operator(op_path, named);
            PhgExpansion f;
            f.remainder_order = target;
            if (!rhs_path.empty()) f = expansion_from_json(load_json_file(rhs_path));
            SolveReport rep =
                ppstar_formal_solve(p, alpha, f, alpha_coker, effective_target(ppstar, f, 0.0));
            emit(out_path, report_text(rep, format));
        } else if (kernel->parsed()) {
            BOperator p = resolve_operator(op_path, named);
            double tgt = kernel->count("--target") ? target : s0_re + 8.0;
            SolveReport rep = kernel_element(p, Cplx(s0_re, s0_im), kpow, tgt);
            emit(out_path, report_text(rep, format));
        } else if (divspec->parsed()) {
            MetricSpec metric = load_metric(metric_path, named.n);
            DivSpectrumReport rep = boundary_spectrum_report(
                metric, operator_from_name(named.name), strip_a, strip_b, lmax);
            emit(out_path, format == "csv" ? div_spectrum_csv(rep)
                                           : to_json(rep).dump(2) + "\n");
        } else if (divsolve->parsed()) {
            MetricSpec metric = load_metric(metric_path, named.n);
            ModeSpec mode{operator_from_name(named.name), named.l,
                          harmonic_from_name(named.type), metric.n};
            BOperator p = mode_reduce(metric, mode, named.taylor_depth);
            PhgExpansion f;
            f.remainder_order = target;
            if (!rhs_path.empty()) f = expansion_from_json(load_json_file(rhs_path));
            double tgt = effective_target(divsolve, f, 0.0);
            SolveReport rep = (route == "ppstar")
                                  ? ppstar_formal_solve(p, alpha, f, alpha_coker, tgt)
                                  : sharp_solve(p, f, alpha_coker, tgt);
            emit(out_path, report_text(rep, format));
        } else if (oracle->parsed()) {
            const int npts = 4001;
            const double rmax = 2.0;
            std::vector<double> r(npts), u(npts);
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
            for (int i = 0; i < npts; ++i) {
                r[i] = rmax * i / (npts - 1);
                if (moment == "zero") {
                    // u = -(1/r^2) d_r(r^2 phi) for the bump phi: zero integral
                    double rr = std::max(r[i], 1e-12);
                    u[i] = -(dbump(rr) + 2.0 * bump(rr) / rr);
                } else {
                    u[i] = bump(r[i]);
                }
            }
            RadialOracleResult res = radial_divergence_oracle(named.n, r, u);
            if (format == "csv") {
                emit(out_path, radial_oracle_csv(res));
            } else {
                json j{{"fittedExponent", res.fitted_exponent},
                       {"rapidDecay", res.rapid_decay},
                       {"totalIntegral", res.total_integral},
                       {"farFieldMax", res.far_field_max}};
                emit(out_path, j.dump(2) + "\n");
            }
        }
    } catch (const NotSolvable& e) {
        std::cerr << "not solvable: " << e.what() << "\n";
        return 2;
    } catch (const PredictionViolated& e) {
        std::cerr << "prediction violated: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
