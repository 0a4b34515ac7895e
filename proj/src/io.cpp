#include "phgb/io.hpp"

#include <fstream>
#include <sstream>

namespace phgb {

json to_json(const Cplx& z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

Cplx cplx_from_json(const json& j) {
    return Cplx(j.at("re").get<double>(), j.value("im", 0.0));
}

json to_json(const IndexSet& s) {
    json entries = json::array();
    for (const auto& e : s.entries)
        entries.push_back(json{{"re", e.s.real()}, {"im", e.s.imag()}, {"k", e.k}});
    return json{{"horizon", s.horizon}, {"entries", entries}};
}

IndexSet index_set_from_json(const json& j) {
    std::vector<IndexEntry> entries;
    for (const auto& e : j.at("entries"))
        entries.push_back({Cplx(e.at("re").get<double>(), e.value("im", 0.0)),
                           e.at("k").get<int>()});
    return validate_index_set(std::move(entries), j.at("horizon").get<double>());
}

json to_json(const PhgExpansion& e) {
    json terms = json::array();
    for (const auto& t : e.terms) {
        json coeff = json::array();
        for (int i = 0; i < t.coeff.size(); ++i) coeff.push_back(to_json(t.coeff(i)));
        terms.push_back(json{{"re", t.s.real()}, {"im", t.s.imag()}, {"k", t.k},
                             {"coeff", coeff}});
    }
    return json{{"remainderOrder", e.remainder_order}, {"terms", terms}};
}

PhgExpansion expansion_from_json(const json& j) {
    PhgExpansion e;
    e.remainder_order = j.at("remainderOrder").get<double>();
    for (const auto& t : j.at("terms")) {
        const auto& carr = t.at("coeff");
        VectorXcd c(carr.size());
        for (size_t i = 0; i < carr.size(); ++i) c(i) = cplx_from_json(carr[i]);
        add_term_inplace(e, {Cplx(t.at("re").get<double>(), t.value("im", 0.0)),
                             t.at("k").get<int>(), c});
    }
    return e;
}

namespace {

json matrix_to_json(const MatrixXcd& m) {
    json arr = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) arr.push_back(to_json(m(i, j)));
    return arr;
}

MatrixXcd matrix_from_json(const json& arr, int rows, int cols) {
    if (static_cast<int>(arr.size()) != rows * cols)
        throw InputError("matrix entry count does not match rows*cols");
    MatrixXcd m(rows, cols);
    int k = 0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = cplx_from_json(arr[k++]);
    return m;
}

} // namespace

json to_json(const MellinFamily& n) {
    json coeffs = json::array();
    for (const auto& a : n.coeffs) coeffs.push_back(matrix_to_json(a));
    return json{{"rows", n.rows}, {"cols", n.cols}, {"coeffs", coeffs}};
}

MellinFamily mellin_from_json(const json& j) {
    MellinFamily n;
    n.rows = j.at("rows").get<int>();
    n.cols = j.at("cols").get<int>();
    for (const auto& a : j.at("coeffs")) n.coeffs.push_back(matrix_from_json(a, n.rows, n.cols));
    if (n.coeffs.empty()) throw InputError("family needs at least one coefficient");
    return n;
}

json to_json(const BOperator& p) {
    json blocks = json::array();
    for (const auto& [jt, a] : p.blocks())
        blocks.push_back(json{{"j", jt.first}, {"t", jt.second}, {"matrix", matrix_to_json(a)}});
    return json{{"order", p.order()},       {"taylorDepth", p.taylor_depth()},
                {"rows", p.rows()},         {"cols", p.cols()},
                {"weight", p.weight()},     {"blocks", blocks},
                {"label", p.label()}};
}

BOperator boperator_from_json(const json& j) {
    BOperator p(j.at("order").get<int>(), j.at("taylorDepth").get<int>(),
                j.at("rows").get<int>(), j.at("cols").get<int>(),
                j.at("weight").get<double>(), j.value("label", ""));
    for (const auto& b : j.at("blocks"))
        p.set_block(b.at("j").get<int>(), b.at("t").get<int>(),
                    matrix_from_json(b.at("matrix"), p.rows(), p.cols()));
    return p;
}

json to_json(const MetricSpec& m) {
    return json{{"n", m.n}, {"a", m.a}, {"b", m.b}};
}

MetricSpec metric_from_json(const json& j) {
    MetricSpec m;
    m.n = j.at("n").get<int>();
    if (j.contains("a")) m.a = j.at("a").get<std::vector<double>>();
    if (j.contains("b")) m.b = j.at("b").get<std::vector<double>>();
    if (m.n < 2) throw InputError("metric dimension must be at least 2");
    return m;
}

namespace {

const char* route_name(SolveRoute r) {
    switch (r) {
        case SolveRoute::Direct: return "direct";
        case SolveRoute::PPStar: return "ppstar";
        case SolveRoute::Kernel: return "kernel";
    }
    return "?";
}

} // namespace

json to_json(const SolveReport& r) {
    json diag = json::array();
    for (const auto& d : r.diagnostics)
        diag.push_back(json{{"s", to_json(d.s)},
                            {"ord", d.ord},
                            {"logsAdded", d.logs_added},
                            {"cokernelPairing", d.cokernel_pairing}});
    json cmp = json::array();
    for (const auto& e : r.comparison_realized)
        cmp.push_back(json{{"re", e.s.real()}, {"im", e.s.imag()}, {"k", e.k}});
    return json{{"route", route_name(r.route)},
                {"targetOrder", r.target_order},
                {"solution", to_json(r.solution)},
                {"predictedIndexSet", to_json(r.predicted)},
                {"realizedIndexSet", to_json(r.realized)},
                {"residual", to_json(r.residual)},
                {"diagnostics", diag},
                {"comparisonRealized", cmp}};
}

json to_json(const DivSpectrumReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        json dims = json::array();
        for (int d : p.quotient_dims) dims.push_back(d);
        pts.push_back(json{{"s", to_json(p.s)},
                           {"ord", p.ord},
                           {"quotientDims", dims},
                           {"l", p.l},
                           {"type", harmonic_name(p.type)}});
    }
    return json{{"reMin", r.re_min}, {"reMax", r.re_max}, {"lmax", r.lmax}, {"points", pts}};
}

json to_json(const SpectrumReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        json dims = json::array();
        for (int d : p.quotient_dims) dims.push_back(d);
        pts.push_back(json{{"z0", to_json(p.z0)},
                           {"s", to_json(p.s)},
                           {"detMultiplicity", p.det_multiplicity},
                           {"ord", p.ord},
                           {"quotientDims", dims},
                           {"provenance", p.provenance}});
    }
    return json{{"imMin", r.im_min}, {"imMax", r.im_max}, {"points", pts}};
}

std::string div_spectrum_csv(const DivSpectrumReport& r) {
    std::ostringstream os;
    os << "re_s,im_s,ord,l,type\n";
    os.precision(17);
    for (const auto& p : r.points)
        os << p.s.real() << "," << p.s.imag() << "," << p.ord << "," << p.l << ","
           << harmonic_name(p.type) << "\n";
    return os.str();
}

std::string solve_report_csv(const SolveReport& r) {
    std::ostringstream os;
    os << "re_s,k,abs_coeff\n";
    os.precision(17);
    for (const auto& t : r.solution.terms)
        os << t.s.real() << "," << t.k << "," << t.coeff.norm() << "\n";
    return os.str();
}

std::string radial_oracle_csv(const RadialOracleResult& r) {
    std::ostringstream os;
    os << "r,f\n";
    os.precision(17);
    for (size_t i = 0; i < r.r.size(); ++i) os << r.r[i] << "," << r.f[i] << "\n";
    return os.str();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
}

} // namespace phgb
