#include <doctest.h>

#include <random>

#include "phgb/series.hpp"

using namespace phgb;

namespace {

VectorXcd vec1(Cplx v) {
    VectorXcd x(1);
    x(0) = v;
    return x;
}

bool sets_equal(const IndexSet& a, const IndexSet& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (const auto& e : a.entries)
        if (!b.contains(e.s, e.k)) return false;
    return true;
}

IndexSet random_closed_set(std::mt19937& rng, double horizon) {
    std::uniform_int_distribution<int> nent(0, 4), kdist(0, 2), sdist(0, 8);
    std::vector<IndexEntry> es;
    int n = nent(rng);
    for (int i = 0; i < n; ++i)
        es.push_back({Cplx(0.5 * sdist(rng), 0.0), kdist(rng)});
    return validate_index_set(es, horizon);
}

// brute-force oracle for the extended union on exact exponents
IndexSet extended_union_oracle(const IndexSet& e, const IndexSet& f) {
    double horizon = std::min(e.horizon, f.horizon);
    std::vector<IndexEntry> out = e.entries;
    out.insert(out.end(), f.entries.begin(), f.entries.end());
    for (const auto& a : e.entries)
        for (const auto& b : f.entries)
            if (std::abs(a.s - b.s) < 1e-12) out.push_back({a.s, a.k + b.k + 1});
    return validate_index_set(out, horizon);
}

} // namespace

TEST_CASE("validate_index_set closes under the shift rule") {
    IndexSet s = validate_index_set({{Cplx(2, 0), 0}}, 4.0);
    CHECK(s.entries.size() == 2);
    CHECK(s.contains(Cplx(2, 0), 0));
    CHECK(s.contains(Cplx(3, 0), 0));
    CHECK(!s.contains(Cplx(4, 0), 0));
}

TEST_CASE("validate_index_set closes under the log rule then shifts") {
    IndexSet s = validate_index_set({{Cplx(2, 0), 1}}, 4.0);
    CHECK(s.entries.size() == 4);
    for (auto [re, k] : {std::pair{2.0, 0}, {2.0, 1}, {3.0, 0}, {3.0, 1}})
        CHECK(s.contains(Cplx(re, 0), k));
}

TEST_CASE("empty entries give the empty index set") {
    CHECK(validate_index_set({}, 5.0).empty());
}

TEST_CASE("validate_index_set rejects negative log powers") {
    CHECK_THROWS_AS(validate_index_set({{Cplx(1, 0), -1}}, 4.0), InputError);
}

TEST_CASE("validate_index_set is idempotent") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        IndexSet s = random_closed_set(rng, 6.0);
        IndexSet again = validate_index_set(s.entries, s.horizon);
        CHECK(sets_equal(s, again));
        CHECK(is_closed(s));
    }
}

TEST_CASE("extended union with identical sets adds one log") {
    IndexSet e = validate_index_set({{Cplx(1, 0), 0}, {Cplx(2, 0), 0}}, 3.0);
    IndexSet u = extended_union(e, e);
    CHECK(u.contains(Cplx(1, 0), 0));
    CHECK(u.contains(Cplx(1, 0), 1));
    CHECK(u.contains(Cplx(2, 0), 0));
    CHECK(u.contains(Cplx(2, 0), 1));
    CHECK(u.entries.size() == 4);
}

TEST_CASE("extended union with the empty set is the identity") {
    IndexSet e = validate_index_set({{Cplx(1, 0), 0}, {Cplx(2, 0), 0}}, 3.0);
    IndexSet empty{{}, 3.0};
    CHECK(sets_equal(extended_union(e, empty), e));
}

TEST_CASE("extended union accumulates logs at shared exponents") {
    IndexSet e = validate_index_set({{Cplx(1, 0), 0}, {Cplx(2, 0), 0}}, 6.0);
    IndexSet f = validate_index_set({{Cplx(2, 0), 1}, {Cplx(3, 0), 1}}, 6.0);
    IndexSet got = extended_union(e, f);
    IndexSet want = extended_union_oracle(e, f);
    CHECK(sets_equal(got, want));
    CHECK(got.contains(Cplx(2, 0), 2));
}

TEST_CASE("extended union is commutative and associative on random closed sets") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        IndexSet a = random_closed_set(rng, 5.0);
        IndexSet b = random_closed_set(rng, 5.0);
        IndexSet c = random_closed_set(rng, 5.0);
        CHECK(sets_equal(extended_union(a, b), extended_union(b, a)));
        CHECK(sets_equal(extended_union(extended_union(a, b), c),
                         extended_union(a, extended_union(b, c))));
    }
}

TEST_CASE("predicted index set with zero orders reproduces the forcing set") {
    auto zero = [](Cplx) { return 0; };
    std::mt19937 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        IndexSet f = random_closed_set(rng, 8.0);
        IndexSet e = predicted_index_set(f, zero, PredictVariant::Forcing, 8.0);
        CHECK(sets_equal(e, f));
    }
}

TEST_CASE("predicted index set accumulates orders along the shift ladder") {
    auto ord = [](Cplx s) { return same_exponent(s, Cplx(2, 0)) ? 1 : 0; };
    IndexSet f = validate_index_set({{Cplx(1, 0), 0}}, 4.0);
    IndexSet e = predicted_index_set(f, ord, PredictVariant::Forcing, 4.0);
    CHECK(e.entries.size() == 5);
    for (auto [re, k] : {std::pair{1.0, 0}, {2.0, 0}, {2.0, 1}, {3.0, 0}, {3.0, 1}})
        CHECK(e.contains(Cplx(re, 0), k));
}

TEST_CASE("predicted index set, divergence-style order function") {
    // one order-1 point at s = n-1 = 2: a log appears exactly when the
    // ladder from s crosses 2, i.e. s <= 2 <= s+j on the integer grid
    auto ord = [](Cplx s) { return same_exponent(s, Cplx(2, 0)) ? 1 : 0; };
    for (double s0 : {0.0, 1.0, 2.0}) {
        IndexSet f = validate_index_set({{Cplx(s0, 0), 0}}, 6.0);
        IndexSet e = predicted_index_set(f, ord, PredictVariant::Forcing, 6.0);
        for (int j = 0; s0 + j < 6.0; ++j) {
            bool expect_log = (s0 <= 2.0) && (s0 + j >= 2.0);
            CHECK(e.contains(Cplx(s0 + j, 0), 0));
            CHECK(e.contains(Cplx(s0 + j, 0), 1) == expect_log);
        }
    }
    // schwartz variant starts the order sum at q=1: no log at the point itself
    IndexSet f2 = validate_index_set({{Cplx(2, 0), 0}}, 5.0);
    IndexSet es = predicted_index_set(f2, ord, PredictVariant::Schwartz, 5.0);
    CHECK(es.contains(Cplx(2, 0), 0));
    CHECK(!es.contains(Cplx(2, 0), 1));
    CHECK(!es.contains(Cplx(3, 0), 1));
}

TEST_CASE("closure rules hold on every produced set") {
    std::mt19937 rng(5);
    auto ord = [](Cplx s) { return same_exponent(s, Cplx(3, 0)) ? 2 : 0; };
    for (int trial = 0; trial < 30; ++trial) {
        IndexSet f = random_closed_set(rng, 6.0);
        CHECK(is_closed(predicted_index_set(f, ord, PredictVariant::Forcing, 6.0)));
        CHECK(is_closed(extended_union(f, random_closed_set(rng, 6.0))));
    }
}

TEST_CASE("add_term merges, cancels, and rejects out-of-range terms") {
    PhgExpansion e;
    e.remainder_order = 5.0;
    add_term_inplace(e, {Cplx(2, 0), 0, vec1(-1.0)});

    SUBCASE("cancellation drops the term") {
        PhgExpansion out = add_term(e, {Cplx(2, 0), 0, vec1(1.0)});
        CHECK(out.empty());
    }
    SUBCASE("new log term") {
        PhgExpansion out = add_term(e, {Cplx(3, 0), 1, vec1(1.0)});
        CHECK(out.terms.size() == 2);
        CHECK(out.find(Cplx(3, 0), 1) != nullptr);
    }
    SUBCASE("vector merge") {
        PhgExpansion f;
        f.remainder_order = 5.0;
        VectorXcd a(2), b(2);
        a << 1.0, 0.0;
        b << 0.0, 1.0;
        add_term_inplace(f, {Cplx(2, 0), 0, a});
        add_term_inplace(f, {Cplx(2, 0), 0, b});
        REQUIRE(f.terms.size() == 1);
        CHECK(f.terms[0].coeff(0) == Cplx(1.0));
        CHECK(f.terms[0].coeff(1) == Cplx(1.0));
    }
    SUBCASE("terms at or beyond the remainder order are rejected") {
        CHECK_THROWS_AS(add_term(e, {Cplx(5, 0), 0, vec1(1.0)}), InputError);
    }
}

TEST_CASE("expansion terms stay sorted canonically") {
    PhgExpansion e;
    e.remainder_order = 10.0;
    add_term_inplace(e, {Cplx(3, 0), 1, vec1(1.0)});
    add_term_inplace(e, {Cplx(1, 0), 0, vec1(1.0)});
    add_term_inplace(e, {Cplx(3, 0), 0, vec1(1.0)});
    add_term_inplace(e, {Cplx(1, -1), 0, vec1(1.0)});
    REQUIRE(e.terms.size() == 4);
    CHECK(e.terms[0].s == Cplx(1, -1));
    CHECK(e.terms[1].s == Cplx(1, 0));
    CHECK(e.terms[2].k == 0);
    CHECK(e.terms[3].k == 1);
}

TEST_CASE("complex entries and order points combine in predictions") {
    auto ord = [](Cplx s) { return same_exponent(s, Cplx(2, 0.5)) ? 2 : 0; };
    IndexSet f = validate_index_set({{Cplx(1, 0.5), 0}}, 4.0);
    IndexSet e = predicted_index_set(f, ord, PredictVariant::Forcing, 4.0);
    CHECK(e.contains(Cplx(1, 0.5), 0));
    CHECK(e.contains(Cplx(2, 0.5), 2));
    CHECK(!e.contains(Cplx(2, 0.5), 3));
    CHECK(e.contains(Cplx(3, 0.5), 2));
    // a nearby but distinct imaginary part stays a separate ladder
    IndexSet g = validate_index_set({{Cplx(1, -0.5), 0}}, 4.0);
    IndexSet eg = predicted_index_set(g, ord, PredictVariant::Forcing, 4.0);
    for (const auto& entry : eg.entries) CHECK(entry.k == 0);
}
