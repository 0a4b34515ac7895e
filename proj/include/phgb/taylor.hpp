#ifndef PHGB_TAYLOR_HPP
#define PHGB_TAYLOR_HPP

#include <vector>

#include "phgb/common.hpp"

namespace phgb {

/// Truncated Taylor series in rho with real coefficients, c[0] + c[1] rho + ...
/// Every operation truncates at the common depth; used to expand the radial
/// metric coefficient functions when assembling mode operators.
class Taylor {
public:
    Taylor() = default;
    explicit Taylor(std::vector<double> c) : c_(std::move(c)) {}
    static Taylor constant(double v, int depth);
    /// 1 + rho * (a0 + a1 rho + ...), the shape of the metric functions.
    static Taylor one_plus_rho(const std::vector<double>& a, int depth);

    int depth() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return k < static_cast<int>(c_.size()) ? c_[k] : 0.0; }

    Taylor operator+(const Taylor& o) const;
    Taylor operator-(const Taylor& o) const;
    Taylor operator*(const Taylor& o) const;
    Taylor operator*(double v) const;
    /// Multiplicative inverse; requires nonzero constant term.
    Taylor reciprocal() const;
    /// Square root; requires positive constant term.
    Taylor sqrt() const;
    /// rho d/drho applied coefficient-wise.
    Taylor dot() const;
    /// Integer power.
    Taylor pow(int n) const;

private:
    std::vector<double> c_;
    static int common_depth(const Taylor& a, const Taylor& b);
};

} // namespace phgb

#endif
