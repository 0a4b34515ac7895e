#ifndef PHGB_EUCLID_HPP
#define PHGB_EUCLID_HPP

#include <functional>
#include <optional>
#include <vector>

#include "phgb/boperator.hpp"
#include "phgb/common.hpp"

namespace phgb {

/// Radial asymptotically Euclidean metric on R^n (rho = 1/r):
///   g = (1 + rho a(rho)) dr^2 + (1 + rho b(rho)) r^2 gamma,
/// equivalently g_ij = delta_ij + rho a w_i w_j + rho b (delta_ij - w_i w_j)
/// with w = x/|x|. a, b are finite Taylor coefficient lists in rho.
struct MetricSpec {
    int n = 3;
    std::vector<double> a, b;

    bool euclidean() const;
    /// a and b agree at order rho (the subleading metric term is isotropic).
    bool spherically_symmetric_to_subleading() const;
    double a_at(double rho) const;
    double b_at(double rho) const;
    /// Closed-form Cartesian components (n = 3 only).
    Eigen::Matrix3d cartesian(const Eigen::Vector3d& x) const;
};

enum class OperatorId { ExteriorD, Div1Form, Div2Tensor, LaplacianScalar };
enum class HarmonicType { Scalar, Vector, Tensor };

struct ModeSpec {
    OperatorId op = OperatorId::Div1Form;
    int l = 0;
    HarmonicType type = HarmonicType::Scalar;
    int n = 3;
};

const char* operator_name(OperatorId id);
const char* harmonic_name(HarmonicType t);
OperatorId operator_from_name(const std::string& s);
HarmonicType harmonic_from_name(const std::string& s);

/// Input/output profile dimensions of the mode block (0 when the operator
/// annihilates or cannot produce the given harmonic type).
int mode_input_dim(OperatorId op, int l, HarmonicType type, int n);
int mode_output_dim(OperatorId op, int l, HarmonicType type, int n);

/// The b-operator of the (l, type) harmonic block, in L^2-orthonormal profile
/// bases, after multiplying the geometric operator by rho^{-order}. The
/// density weight is w = -n unless overridden.
BOperator mode_reduce(const MetricSpec& metric, const ModeSpec& mode, int taylor_depth = 8,
                      std::optional<double> weight_override = std::nullopt);

struct ModeSpectrumPoint {
    Cplx s;  // exponent
    int ord = 0;
    std::vector<int> quotient_dims;
    int l = 0;
    HarmonicType type = HarmonicType::Scalar;
};

struct DivSpectrumReport {
    std::vector<ModeSpectrumPoint> points;
    double re_min = 0.0, re_max = 0.0;
    int lmax = 0;
};

/// Surjective boundary spectrum (exponents s with ord(P^*, .) >= 1, Re s in
/// [re_min, re_max)) aggregated over harmonic modes l <= lmax.
DivSpectrumReport boundary_spectrum_report(const MetricSpec& metric, OperatorId op,
                                           double re_min, double re_max, int lmax);

// -- oracles ------------------------------------------------------------------

struct RadialOracleResult {
    std::vector<double> r;    // input grid
    std::vector<double> f;    // quadrature solution of the radial mode
    double total_integral = 0.0;   // int_0^R t^2 u(t) dt
    double fitted_exponent = 0.0;  // decay power: |f| ~ r^{-fitted_exponent}
    bool rapid_decay = false;
    double far_field_max = 0.0;
};

/// Quadrature solve f(r) = -r^{-2} int_0^r u(t) t^2 dt of the radial mode of
/// the divergence equation on 1-forms (n = 3), with a log-log slope fit of
/// |f| over [10 R, 1000 R].
RadialOracleResult radial_divergence_oracle(int n, const std::vector<double>& r,
                                            const std::vector<double>& u);

struct CartesianOracleResult {
    std::vector<double> radii;
    /// One matrix per refinement level (h, h/2, ...): radii x output-dim,
    /// the finite-difference operator output projected onto the mode.
    std::vector<Eigen::MatrixXd> outputs;
    /// Worst relative sphere-fit residual per level (mode contamination).
    std::vector<double> fit_residual;
    double h0 = 0.0;
};

/// Applies the geometric operator in Cartesian components by second-order
/// finite differences to the separated field profile x harmonic, multiplies
/// by r^{order}, and projects back onto the mode (n = 3). `profiles` has one
/// radial callable per input basis element. Throws GridTooCoarse when the
/// two finest levels disagree beyond `self_check_tol`.
CartesianOracleResult cartesian_apply_oracle(
    const MetricSpec& metric, const ModeSpec& mode,
    const std::vector<std::function<double(double)>>& profiles,
    const std::vector<double>& radii, double h0, int levels = 2,
    double self_check_tol = 1e-2);

/// Mode-side reference: apply the reduced operator to profiles rho^{s_in[i]}
/// on basis element i and evaluate the resulting expansion at the radii.
Eigen::MatrixXd mode_apply_power_profiles(const BOperator& p, const std::vector<double>& s_in,
                                          const std::vector<double>& radii);

} // namespace phgb

#endif
