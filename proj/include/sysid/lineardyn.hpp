#pragma once

#include <optional>
#include <vector>

#include "sysid/aeromean.hpp"
#include "sysid/flightdata.hpp"

namespace sysid {

struct DimensionalDerivatives {
    double M_alpha = 0.0;      // 1/s^2
    double M_q = 0.0;          // 1/s
    double M_alpha_dot = 0.0;  // 1/s
    double M_delta_e = 0.0;    // 1/s^2
    double Z_alpha = 0.0;      // m/s^2 per rad
    double Z_delta_e = 0.0;    // m/s^2 per rad
    double U1 = 1.0;           // m/s
    double Theta1 = 0.0;       // rad
};

struct CoefficientDerivatives {
    double Cm_alpha = 0.0;
    double Cm_q_nd = 0.0;     // per unit qtilde
    double Cm_q_rad_s = 0.0;  // per rad/s, filled when the airspeed is known
    double Cm_delta_e = 0.0;
    double Cz_alpha = 0.0;
    double Cz_delta_e = 0.0;
};

enum class ModeFlag { Oscillatory, NonOscillatory };

struct ShortPeriodResult {
    double omega_sp = 0.0;  // rad/s; NaN when the characteristic roots are real
    double zeta_sp = 0.0;
    ModeFlag flag = ModeFlag::NonOscillatory;
    double qbar = 0.0;
    double mach = 0.0;
    DimensionalDerivatives derivatives;
    std::optional<double> posterior_sigma;

    bool populated() const;
};

ShortPeriodResult one_dof_short_period(double M_alpha, double M_alpha_dot);
ShortPeriodResult two_dof_short_period(const DimensionalDerivatives& d);
ShortPeriodResult short_period_with_mq_substitution(const DimensionalDerivatives& d);

// Polynomials stored highest power first.
struct RationalPolynomial {
    std::vector<double> numerator;
    std::vector<double> denominator;
};

RationalPolynomial alpha_transfer_function(const DimensionalDerivatives& d);

// Central differences of the models at (alpha, qtilde = 0, delta_e).
CoefficientDerivatives linearize_truth(const GenericAeroModel& cm, const GenericAeroModel& cz, double alpha,
                                       double delta_e, double h_angle = 1e-4, double h_qtilde = 1e-5);

DimensionalDerivatives dimensionalize(const CoefficientDerivatives& c, const AircraftGeometry& geom, double qbar,
                                      double U1, bool mq_substitution = false);

}  // namespace sysid
