#pragma once

#include <string_view>

namespace sysid::units {

inline constexpr double kFoot = 0.3048;
inline constexpr double kPoundForce = 4.4482216152605;
inline constexpr double kSlug = 14.593902937206364;
inline constexpr double kSlugPerCubicFoot = kSlug / (kFoot * kFoot * kFoot);  // 515.3788...
inline constexpr double kPsf = kPoundForce / (kFoot * kFoot);                 // 47.880...
inline constexpr double kKnot = 1852.0 / 3600.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDeg = kPi / 180.0;

// Affine map from a tagged unit to SI: si = value * scale + offset.
struct Conversion {
    double scale = 1.0;
    double offset = 0.0;
};

// Throws UnitError for unknown tags.
Conversion lookup(std::string_view tag);
bool known(std::string_view tag);

double to_si(double value, std::string_view tag);
double from_si(double value, std::string_view tag);

}  // namespace sysid::units
