#pragma once

// International Standard Atmosphere, troposphere and lower stratosphere.

namespace sysid::isa {

inline constexpr double kGasConstant = 287.05287;  // J/(kg K)
inline constexpr double kGamma = 1.4;
inline constexpr double kG0 = 9.80665;
inline constexpr double kT0 = 288.15;
inline constexpr double kP0 = 101325.0;
inline constexpr double kLapse = 0.0065;
inline constexpr double kTropopause = 11000.0;

struct Point {
    double temperature;  // K
    double pressure;     // Pa
    double density;      // kg/m^3
};

Point at_altitude(double h);
double altitude_from_pressure(double p);
double altitude_from_density(double rho);
double speed_of_sound(double temperature);

// Dynamic pressure from static pressure and Mach: qbar = gamma/2 * p * M^2.
double qbar_from_pressure_mach(double p, double mach);
// Altitude at which a given Mach number produces the requested dynamic pressure.
double altitude_for_qbar_mach(double qbar, double mach);

}  // namespace sysid::isa
