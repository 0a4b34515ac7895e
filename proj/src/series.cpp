#include "phgb/series.hpp"

#include <algorithm>
#include <cmath>

namespace phgb {

bool entry_less(const IndexEntry& a, const IndexEntry& b) {
    if (a.s.real() != b.s.real()) return a.s.real() < b.s.real();
    if (a.s.imag() != b.s.imag()) return a.s.imag() < b.s.imag();
    return a.k < b.k;
}

bool entry_same(const IndexEntry& a, const IndexEntry& b) {
    return a.k == b.k && same_exponent(a.s, b.s);
}

namespace {

void sort_dedupe(std::vector<IndexEntry>& v) {
    std::sort(v.begin(), v.end(), entry_less);
    std::vector<IndexEntry> out;
    for (const auto& e : v) {
        if (!out.empty() && entry_same(out.back(), e)) continue;
        out.push_back(e);
    }
    v.swap(out);
}

} // namespace

bool IndexSet::contains(Cplx s, int k) const {
    for (const auto& e : entries)
        if (e.k == k && same_exponent(e.s, s)) return true;
    return false;
}

IndexSet validate_index_set(std::vector<IndexEntry> entries, double horizon) {
    for (const auto& e : entries)
        if (e.k < 0) throw InputError("index entry with negative log power");

    std::vector<IndexEntry> work;
    for (const auto& e : entries)
        if (e.s.real() < horizon) work.push_back(e);

    // Close under k -> k-1 first, then under s -> s+1 (the shift preserves k,
    // so one pass of each in this order is enough).
    std::vector<IndexEntry> closed;
    for (const auto& e : work)
        for (int k = 0; k <= e.k; ++k) closed.push_back({e.s, k});
    std::vector<IndexEntry> shifted;
    for (const auto& e : closed) {
        Cplx s = e.s;
        while (s.real() < horizon) {
            shifted.push_back({s, e.k});
            s += 1.0;
        }
    }
    sort_dedupe(shifted);
    return IndexSet{std::move(shifted), horizon};
}

bool is_closed(const IndexSet& e) {
    for (const auto& a : e.entries) {
        if (a.k >= 1 && !e.contains(a.s, a.k - 1)) return false;
        if (a.s.real() + 1.0 < e.horizon && !e.contains(a.s + 1.0, a.k)) return false;
    }
    return true;
}

IndexSet extended_union(const IndexSet& e, const IndexSet& f) {
    double horizon = std::min(e.horizon, f.horizon);
    std::vector<IndexEntry> out = e.entries;
    out.insert(out.end(), f.entries.begin(), f.entries.end());
    for (const auto& a : e.entries)
        for (const auto& b : f.entries)
            if (same_exponent(a.s, b.s)) out.push_back({a.s, a.k + b.k + 1});
    return validate_index_set(std::move(out), horizon);
}

IndexSet predicted_index_set(const IndexSet& f,
                             const std::function<int(Cplx)>& ord_fn,
                             PredictVariant variant,
                             double horizon) {
    std::vector<IndexEntry> out;
    const int q0 = (variant == PredictVariant::Forcing) ? 0 : 1;
    for (const auto& e : f.entries) {
        int logs = 0;
        for (int j = 0; e.s.real() + j < horizon; ++j) {
            for (int q = (j == 0 ? q0 : j); q <= j; ++q)
                logs += ord_fn(e.s + static_cast<double>(q));
            for (int l = 0; l <= logs; ++l)
                out.push_back({e.s + static_cast<double>(j), e.k + l});
        }
    }
    return validate_index_set(std::move(out), horizon);
}

double PhgExpansion::leading_order() const {
    double lead = remainder_order;
    for (const auto& t : terms) lead = std::min(lead, t.s.real());
    return lead;
}

const PhgTerm* PhgExpansion::find(Cplx s, int k) const {
    for (const auto& t : terms)
        if (t.k == k && same_exponent(t.s, s)) return &t;
    return nullptr;
}

IndexSet PhgExpansion::realized_index_set() const {
    std::vector<IndexEntry> es;
    es.reserve(terms.size());
    for (const auto& t : terms) es.push_back({t.s, t.k});
    std::sort(es.begin(), es.end(), entry_less);
    return IndexSet{std::move(es), remainder_order};
}

void add_term_inplace(PhgExpansion& e, const PhgTerm& t) {
    if (t.s.real() >= e.remainder_order)
        throw InputError("term at or beyond the remainder order");
    for (auto it = e.terms.begin(); it != e.terms.end(); ++it) {
        if (it->k == t.k && same_exponent(it->s, t.s)) {
            if (it->coeff.size() != t.coeff.size())
                throw DimensionMismatch("term coefficient sizes differ");
            it->coeff += t.coeff;
            if (it->coeff.norm() == 0.0) e.terms.erase(it);
            return;
        }
    }
    if (t.coeff.norm() == 0.0) return;
    auto pos = std::lower_bound(e.terms.begin(), e.terms.end(), t,
                                [](const PhgTerm& a, const PhgTerm& b) {
                                    return entry_less({a.s, a.k}, {b.s, b.k});
                                });
    e.terms.insert(pos, t);
}

PhgExpansion add_term(const PhgExpansion& e, const PhgTerm& t) {
    PhgExpansion out = e;
    add_term_inplace(out, t);
    return out;
}

void clean_expansion(PhgExpansion& e, double tol) {
    double scale = 0.0;
    for (const auto& t : e.terms) scale = std::max(scale, t.coeff.cwiseAbs().maxCoeff());
    if (scale == 0.0) scale = 1.0;
    drop_below(e, tol * scale);
}

void drop_below(PhgExpansion& e, double absolute_tol) {
    std::vector<PhgTerm> kept;
    for (auto& t : e.terms) {
        if (t.coeff.size() == 0) continue;
        for (int i = 0; i < t.coeff.size(); ++i)
            if (std::abs(t.coeff[i]) <= absolute_tol) t.coeff[i] = 0.0;
        if (t.coeff.norm() > 0.0) kept.push_back(std::move(t));
    }
    e.terms.swap(kept);
}

} // namespace phgb
