#ifndef PHGB_COMMON_HPP
#define PHGB_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <cmath>

#include <Eigen/Dense>

namespace phgb {

using Cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Default numerical knobs. The rank and root tolerances are process-wide
/// and surfaced as CLI flags; the rest are fixed defaults.
struct Tol {
    static inline double exponent_rel = 1e-9;  // exponent identification
    static inline double root_cluster = 1e-7;  // root cluster merge radius
    static inline double rank_rel = 1e-9;      // SVD rank threshold
    static constexpr double residual = 1e-10;  // Laurent residual contract
    static constexpr double drop = 1e-13;      // coefficient cleanup
};

/// Two exponents are the same expansion slot when |s-s'| <= tol*max(1,|s|).
inline bool same_exponent(Cplx a, Cplx b, double tol = Tol::exponent_rel) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
}

// -- error taxonomy ----------------------------------------------------------

struct PhgbError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IdenticallySingular : PhgbError {
    IdenticallySingular() : PhgbError("determinant of the family vanishes identically") {}
};

struct OrderNotResolved : PhgbError {
    explicit OrderNotResolved(const std::string& what) : PhgbError(what) {}
};

struct DimensionMismatch : PhgbError {
    explicit DimensionMismatch(const std::string& what) : PhgbError(what) {}
};

struct NotInDomain : PhgbError {
    explicit NotInDomain(const std::string& what) : PhgbError(what) {}
};

/// Thrown when the regular stage of a normal-operator solve is inconsistent;
/// carries the direction of the obstructing cokernel functional.
struct NotSolvable : PhgbError {
    VectorXcd cokernel;
    Cplx z0;
    NotSolvable(const std::string& what, VectorXcd coker, Cplx z)
        : PhgbError(what), cokernel(std::move(coker)), z0(z) {}
};

struct PredictionViolated : PhgbError {
    explicit PredictionViolated(const std::string& what) : PhgbError(what) {}
};

struct TaylorDepthExceeded : PhgbError {
    explicit TaylorDepthExceeded(const std::string& what) : PhgbError(what) {}
};

struct NotUnderdetermined : PhgbError {
    explicit NotUnderdetermined(const std::string& what) : PhgbError(what) {}
};

struct InadmissibleMode : PhgbError {
    explicit InadmissibleMode(const std::string& what) : PhgbError(what) {}
};

struct GridTooCoarse : PhgbError {
    explicit GridTooCoarse(const std::string& what) : PhgbError(what) {}
};

struct InputError : PhgbError {
    explicit InputError(const std::string& what) : PhgbError(what) {}
};

} // namespace phgb

#endif
