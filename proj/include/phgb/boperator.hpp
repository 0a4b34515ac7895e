#ifndef PHGB_BOPERATOR_HPP
#define PHGB_BOPERATOR_HPP

#include <map>
#include <string>

#include "phgb/common.hpp"
#include "phgb/mellin.hpp"
#include "phgb/series.hpp"

namespace phgb {

/// P = sum_{j,t} A_{j,t} rho^t (rho D_rho)^j with D = -i d/drho, acting on
/// mode-space vectors; coefficients Taylor-truncated at depth T. The weight w
/// is the rho-power of the reference density and fixes every adjoint.
///
/// Exponent/Mellin bridge used throughout: a term rho^s corresponds to the
/// Mellin point z = -i s, and (rho D_rho) rho^s = -i s rho^s.
class BOperator {
public:
    BOperator(int order, int taylor_depth, int rows, int cols, double weight,
              std::string label = "");

    int order() const { return order_; }
    int taylor_depth() const { return taylor_depth_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double weight() const { return weight_; }
    const std::string& label() const { return label_; }
    void set_label(std::string l) { label_ = std::move(l); }

    /// Missing blocks are zero; t beyond the Taylor depth is an error,
    /// never silently zero.
    const MatrixXcd& block(int j, int t) const;
    void set_block(int j, int t, MatrixXcd a);
    bool has_block(int j, int t) const;
    const std::map<std::pair<int, int>, MatrixXcd>& blocks() const { return blocks_; }

    static BOperator rho_d_rho(double weight = 0.0, int taylor_depth = 8);

private:
    int order_, taylor_depth_, rows_, cols_;
    double weight_;
    std::string label_;
    std::map<std::pair<int, int>, MatrixXcd> blocks_;
    MatrixXcd zero_;
};

/// Dilation-invariant part: the Mellin family N(z) = sum_j A_{j,0} z^j.
MellinFamily normal_part(const BOperator& p);

/// Formal term-by-term application. Output remainder order is
/// min(u.remainder, min_s Re s + T + 1), reflecting the Taylor truncation.
PhgExpansion apply_to_expansion(const BOperator& p, const PhgExpansion& u);

/// Adjoint with respect to the weight-w density:
/// (rho D_rho)^* = rho D_rho - i w, (A rho^t (rho D_rho)^j)^* expands via
/// rho D_rho rho^t = rho^t (rho D_rho - i t).
BOperator adjoint(const BOperator& p);

/// rho^{-alpha} P rho^{alpha}: every rho D_rho becomes rho D_rho - i alpha.
BOperator conjugate_by_weight(const BOperator& p, double alpha);

/// Product operator to the shared Taylor depth; N(PQ, z) = N(P,z) N(Q,z).
BOperator compose(const BOperator& p, const BOperator& q);

/// ord(P^*, conj(-i s)+i w) as a function of the exponent, backed by the
/// adjoint of the normal family.
OrdFunction make_ord_function(const BOperator& p, int jmax = 6);

/// Surjective boundary spectrum of the operator over the exponent window
/// Re s in [re_min, re_max): one point per singular exponent of the adjoint
/// family, with order and chain-space dimensions; detMultiplicity is the
/// determinant root multiplicity when the adjoint family is square, else 0.
SpectrumReport spectrum_report(const BOperator& p, double re_min, double re_max, int jmax = 6);

} // namespace phgb

#endif
