#include "sysid/lineardyn.hpp"

#include <cmath>
#include <limits>

#include "sysid/errors.hpp"

namespace sysid {

bool ShortPeriodResult::populated() const { return std::isfinite(omega_sp) && std::isfinite(zeta_sp); }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Closed form for roots of s^2 + b s + c with c > 0: |s| = sqrt(c), zeta = b / (2 sqrt(c)).
ShortPeriodResult from_radicand(double radicand, double damping_sum) {
    ShortPeriodResult r;
    if (!(radicand > 0.0)) {
        r.omega_sp = kNaN;
        r.zeta_sp = kNaN;
        r.flag = ModeFlag::NonOscillatory;
        return r;
    }
    r.omega_sp = std::sqrt(radicand);
    r.zeta_sp = -damping_sum / (2.0 * r.omega_sp);
    r.flag = (r.zeta_sp >= 0.0 && r.zeta_sp < 1.0) ? ModeFlag::Oscillatory : ModeFlag::NonOscillatory;
    return r;
}

}  // namespace

ShortPeriodResult one_dof_short_period(double M_alpha, double M_alpha_dot) {
    auto r = from_radicand(-M_alpha, M_alpha_dot);
    r.derivatives.M_alpha = M_alpha;
    r.derivatives.M_alpha_dot = M_alpha_dot;
    return r;
}

ShortPeriodResult two_dof_short_period(const DimensionalDerivatives& d) {
    if (!(d.U1 > 0.0)) throw DataError("short period: U1 must be positive");
    // Appendix sign convention: +Z_alpha M_q / U1.
    auto r = from_radicand(d.Z_alpha * d.M_q / d.U1 - d.M_alpha, d.M_q + d.Z_alpha / d.U1 + d.M_alpha_dot);
    r.derivatives = d;
    return r;
}

ShortPeriodResult short_period_with_mq_substitution(const DimensionalDerivatives& d) {
    DimensionalDerivatives s = d;
    s.M_alpha_dot = d.M_q / 3.0;
    return two_dof_short_period(s);
}

RationalPolynomial alpha_transfer_function(const DimensionalDerivatives& d) {
    if (!(d.U1 > 0.0)) throw DataError("transfer function: U1 must be positive");
    RationalPolynomial tf;
    tf.numerator = {d.Z_delta_e / d.U1, (d.M_delta_e * d.U1 - d.M_q * d.Z_delta_e) / d.U1};
    tf.denominator = {1.0, -(d.M_q + d.Z_alpha / d.U1 + d.M_alpha_dot), d.Z_alpha * d.M_q / d.U1 - d.M_alpha};
    return tf;
}

CoefficientDerivatives linearize_truth(const GenericAeroModel& cm, const GenericAeroModel& cz, double alpha,
                                       double delta_e, double ha, double hq) {
    auto diff = [&](const GenericAeroModel& m, AeroPoint lo, AeroPoint hi, double h) {
        return (evaluate(m, hi) - evaluate(m, lo)) / (2.0 * h);
    };
    const AeroPoint c{alpha, 0.0, delta_e};
    auto shifted = [&](double da, double dq, double dd) { return AeroPoint{c.alpha + da, c.qtilde + dq, c.delta_e + dd}; };
    CoefficientDerivatives r;
    r.Cm_alpha = diff(cm, shifted(-ha, 0, 0), shifted(ha, 0, 0), ha);
    r.Cm_q_nd = diff(cm, shifted(0, -hq, 0), shifted(0, hq, 0), hq);
    r.Cm_delta_e = diff(cm, shifted(0, 0, -ha), shifted(0, 0, ha), ha);
    r.Cz_alpha = diff(cz, shifted(-ha, 0, 0), shifted(ha, 0, 0), ha);
    r.Cz_delta_e = diff(cz, shifted(0, 0, -ha), shifted(0, 0, ha), ha);
    return r;
}

DimensionalDerivatives dimensionalize(const CoefficientDerivatives& c, const AircraftGeometry& g, double qbar,
                                      double U1, bool mq_substitution) {
    if (!(qbar > 0.0) || !(U1 > 0.0)) throw DataError("dimensionalize: qbar and U1 must be positive");
    const double moment = qbar * g.S * g.cbar / g.Iy;
    const double force = qbar * g.S / g.mass;
    DimensionalDerivatives d;
    d.M_alpha = c.Cm_alpha * moment;
    d.M_delta_e = c.Cm_delta_e * moment;
    d.M_q = c.Cm_q_nd * (g.cbar / (2.0 * U1)) * moment;
    d.Z_alpha = c.Cz_alpha * force;
    d.Z_delta_e = c.Cz_delta_e * force;
    d.U1 = U1;
    d.M_alpha_dot = mq_substitution ? d.M_q / 3.0 : 0.0;
    return d;
}

}  // namespace sysid
