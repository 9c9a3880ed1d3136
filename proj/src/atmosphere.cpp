#include "sysid/atmosphere.hpp"

#include <cmath>

namespace sysid::isa {
namespace {

constexpr double kExponent = kG0 / (kLapse * kGasConstant);
constexpr double kT11 = kT0 - kLapse * kTropopause;

double p11() {
    static const double p = kP0 * std::pow(kT11 / kT0, kExponent);
    return p;
}

}  // namespace

Point at_altitude(double h) {
    double T, p;
    if (h <= kTropopause) {
        T = kT0 - kLapse * h;
        p = kP0 * std::pow(T / kT0, kExponent);
    } else {
        T = kT11;
        p = p11() * std::exp(-kG0 * (h - kTropopause) / (kGasConstant * T));
    }
    return {T, p, p / (kGasConstant * T)};
}

double altitude_from_pressure(double p) {
    if (p >= p11()) {
        const double T = kT0 * std::pow(p / kP0, 1.0 / kExponent);
        return (kT0 - T) / kLapse;
    }
    return kTropopause - std::log(p / p11()) * kGasConstant * kT11 / kG0;
}

double altitude_from_density(double rho) {
    const double rho11 = p11() / (kGasConstant * kT11);
    if (rho >= rho11) {
        const double rho0 = kP0 / (kGasConstant * kT0);
        // rho/rho0 = (T/T0)^(exponent - 1)
        const double T = kT0 * std::pow(rho / rho0, 1.0 / (kExponent - 1.0));
        return (kT0 - T) / kLapse;
    }
    return kTropopause - std::log(rho / rho11) * kGasConstant * kT11 / kG0;
}

double speed_of_sound(double temperature) {
    return std::sqrt(kGamma * kGasConstant * temperature);
}

double qbar_from_pressure_mach(double p, double mach) {
    return 0.5 * kGamma * p * mach * mach;
}

double altitude_for_qbar_mach(double qbar, double mach) {
    return altitude_from_pressure(qbar / (0.5 * kGamma * mach * mach));
}

}  // namespace sysid::isa
