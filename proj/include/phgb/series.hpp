#ifndef PHGB_SERIES_HPP
#define PHGB_SERIES_HPP

#include <functional>
#include <vector>

#include "phgb/common.hpp"

namespace phgb {

/// One slot of an index set: the term family rho^s (log rho)^k. Re s is the
/// decay order (rho = 1/r near infinity).
struct IndexEntry {
    Cplx s;
    int k = 0;
};

/// Canonical order is lexicographic by (Re s, Im s, k); reports are stable
/// byte-for-byte because every container below keeps it.
bool entry_less(const IndexEntry& a, const IndexEntry& b);
bool entry_same(const IndexEntry& a, const IndexEntry& b);

/// Finite truncation of an index set. Entries with Re s < horizon are
/// complete; nothing is claimed at or beyond the horizon.
struct IndexSet {
    std::vector<IndexEntry> entries;  // sorted, deduplicated
    double horizon = 0.0;

    bool contains(Cplx s, int k) const;
    bool empty() const { return entries.empty(); }
};

/// Smallest index set containing `entries`, closed under s -> s+1 and
/// k -> k-1 below the horizon. Rejects k < 0.
IndexSet validate_index_set(std::vector<IndexEntry> entries, double horizon);

/// True when both closure rules hold below the horizon (exhaustive check).
bool is_closed(const IndexSet& e);

/// Extended union E u F u {(s, k+l+1) : (s,k) in E, (s,l) in F}, re-closed.
/// Horizons are truncated to the smaller one.
IndexSet extended_union(const IndexSet& e, const IndexSet& f);

enum class PredictVariant { Forcing, Schwartz };

/// Index set predicted for solutions with right-hand side set F:
///   { (s+j, k+l) : (s,k) in F, j >= 0, l <= sum_q ord(s+q) }
/// where the sum starts at q=0 (Forcing) or q=1 (Schwartz) and
/// ordFn(s) = ord(P^*, conj(-i s) + i w) is supplied by the caller.
IndexSet predicted_index_set(const IndexSet& f,
                             const std::function<int(Cplx)>& ord_fn,
                             PredictVariant variant,
                             double horizon);

/// A single term rho^s (log rho)^k * coeff of an expansion.
struct PhgTerm {
    Cplx s;
    int k = 0;
    VectorXcd coeff;
};

/// Polyhomogeneous expansion: sorted distinct terms, all with
/// Re s < remainder_order; the represented function minus the term sum is
/// O(rho^{remainder_order - eps}).
struct PhgExpansion {
    std::vector<PhgTerm> terms;
    double remainder_order = 0.0;

    bool empty() const { return terms.empty(); }
    int dim() const { return terms.empty() ? 0 : static_cast<int>(terms.front().coeff.size()); }
    /// Smallest Re s among terms; remainder_order if empty.
    double leading_order() const;
    const PhgTerm* find(Cplx s, int k) const;
    /// Entries of the realized index set (one per nonzero term).
    IndexSet realized_index_set() const;
};

/// Coefficient-wise merge of t into e at key (t.s, t.k); exact zero results
/// are dropped. Throws if Re t.s >= e.remainder_order.
PhgExpansion add_term(const PhgExpansion& e, const PhgTerm& t);

/// In-place variant used by the solvers.
void add_term_inplace(PhgExpansion& e, const PhgTerm& t);

/// Drop terms whose coefficients are all below `tol` * scale.
void clean_expansion(PhgExpansion& e, double tol = Tol::drop);

/// Drop terms whose coefficients are all below the absolute threshold.
void drop_below(PhgExpansion& e, double absolute_tol);

} // namespace phgb

#endif
