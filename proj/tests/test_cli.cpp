#include <doctest.h>

#include <array>
#include <cstdio>
#include <string>

#include "phgb/io.hpp"

using namespace phgb;

namespace {

struct RunResult {
    int status = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(PHGB_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) res.out += buf.data();
    res.status = WEXITSTATUS(pclose(pipe));
    return res;
}

std::string data_path(const std::string& name) {
    return std::string(PHGB_DATA_DIR) + "/" + name;
}

} // namespace

TEST_CASE("spec command reports the rho D_rho spectrum") {
    RunResult r = run_cli("spec --op " + data_path("rDr.json") + " --strip -2 2");
    REQUIRE(r.status == 0);
    json j = parse_json(r.out);
    REQUIRE(j.at("points").size() == 1);
    CHECK(std::abs(j["points"][0]["s"]["re"].get<double>()) < 1e-9);
    CHECK(j["points"][0]["ord"].get<int>() == 1);
}

TEST_CASE("divspec reproduces the 2-tensor spectrum") {
    RunResult r = run_cli("divspec --n 3 --operator div_2tensor --lmax 4 --strip 0 4");
    REQUIRE(r.status == 0);
    json j = parse_json(r.out);
    REQUIRE(j.at("points").size() == 2);
    CHECK(std::abs(j["points"][0]["s"]["re"].get<double>() - 2.0) < 1e-7);
    CHECK(std::abs(j["points"][1]["s"]["re"].get<double>() - 3.0) < 1e-7);
}

TEST_CASE("solve command: rho D_rho with constant forcing") {
    RunResult r = run_cli("solve --op " + data_path("rDr.json") + " --rhs " +
                          data_path("const.json") + " --target 3");
    REQUIRE(r.status == 0);
    json j = parse_json(r.out);
    const auto& terms = j["solution"]["terms"];
    REQUIRE(terms.size() == 1);
    CHECK(terms[0]["k"].get<int>() == 1);
    CHECK(std::abs(terms[0]["coeff"][0]["im"].get<double>() - 1.0) < 1e-12);
    CHECK(std::abs(terms[0]["coeff"][0]["re"].get<double>()) < 1e-12);
}

TEST_CASE("identical inputs produce identical bytes") {
    const std::string cmd =
        "divsolve --n 3 --operator div_2tensor --l 1 --type scalar --alpha-coker 1.9 "
        "--target 6";
    RunResult a = run_cli(cmd);
    RunResult b = run_cli(cmd);
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
}

TEST_CASE("emitted JSON round-trips") {
    RunResult r = run_cli("solve --op " + data_path("rDr_plus_rho.json") + " --rhs " +
                          data_path("const.json") + " --target 3");
    REQUIRE(r.status == 0);
    json j = parse_json(r.out);
    PhgExpansion sol = expansion_from_json(j["solution"]);
    json again = to_json(sol);
    CHECK(again == j["solution"]);
    IndexSet pred = index_set_from_json(j["predictedIndexSet"]);
    CHECK(to_json(pred) == j["predictedIndexSet"]);
}

TEST_CASE("operator and metric files round-trip") {
    BOperator p = boperator_from_json(load_json_file(data_path("rDr_plus_rho.json")));
    json j = to_json(p);
    BOperator q = boperator_from_json(j);
    CHECK(to_json(q) == j);
    CHECK(q.label() == "rho*D_rho + rho");

    MellinFamily fam = normal_part(p);
    json jf = to_json(fam);
    MellinFamily fam2 = mellin_from_json(jf);
    CHECK(to_json(fam2) == jf);

    MetricSpec m;
    m.n = 3;
    m.a = {0.25};
    m.b = {-0.5, 0.125};
    MetricSpec m2 = metric_from_json(to_json(m));
    CHECK(m2.a == m.a);
    CHECK(m2.b == m.b);
}

TEST_CASE("malformed input exits with code 1 and bad solves with code 2") {
    RunResult bad = run_cli("solve --op " + data_path("nonexistent.json") + " --target 3");
    CHECK(bad.status == 1);
    RunResult badsub = run_cli("divspec --n 3 --operator not_an_operator");
    CHECK(badsub.status == 1);
}

TEST_CASE("csv output has the documented shape") {
    RunResult r = run_cli("solve --op " + data_path("rDr.json") + " --rhs " +
                          data_path("const.json") + " --target 3 --format csv");
    REQUIRE(r.status == 0);
    CHECK(r.out.rfind("re_s,k,abs_coeff\n", 0) == 0);
}

TEST_CASE("oracle command fits the inverse-square slope") {
    RunResult r = run_cli("oracle --n 3 --moment nonzero");
    REQUIRE(r.status == 0);
    json j = parse_json(r.out);
    CHECK(std::abs(j["fittedExponent"].get<double>() - 2.0) < 0.05);
    CHECK(!j["rapidDecay"].get<bool>());

    RunResult rz = run_cli("oracle --n 3 --moment zero");
    REQUIRE(rz.status == 0);
    json jz = parse_json(rz.out);
    CHECK(jz["rapidDecay"].get<bool>());
}
