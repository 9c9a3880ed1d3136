#include "sysid/units.hpp"

#include <array>
#include <string>
#include <utility>

#include "sysid/errors.hpp"

namespace sysid::units {
namespace {

struct Entry {
    std::string_view tag;
    Conversion conv;
};

constexpr std::array kTable{
    Entry{"1", {1.0, 0.0}},
    Entry{"s", {1.0, 0.0}},
    Entry{"m", {1.0, 0.0}},
    Entry{"ft", {kFoot, 0.0}},
    Entry{"m/s", {1.0, 0.0}},
    Entry{"ft/s", {kFoot, 0.0}},
    Entry{"kt", {kKnot, 0.0}},
    Entry{"kg/m3", {1.0, 0.0}},
    Entry{"slug/ft3", {kSlugPerCubicFoot, 0.0}},
    Entry{"Pa", {1.0, 0.0}},
    Entry{"lb/ft2", {kPsf, 0.0}},
    Entry{"psf", {kPsf, 0.0}},
    Entry{"rad", {1.0, 0.0}},
    Entry{"deg", {kDeg, 0.0}},
    Entry{"rad/s", {1.0, 0.0}},
    Entry{"deg/s", {kDeg, 0.0}},
    Entry{"g", {1.0, 0.0}},
    Entry{"K", {1.0, 0.0}},
    Entry{"degC", {1.0, 273.15}},
    Entry{"degF", {5.0 / 9.0, 273.15 - 32.0 * 5.0 / 9.0}},
};

}  // namespace

bool known(std::string_view tag) {
    for (const auto& e : kTable)
        if (e.tag == tag) return true;
    return false;
}

Conversion lookup(std::string_view tag) {
    for (const auto& e : kTable)
        if (e.tag == tag) return e.conv;
    throw UnitError("unknown unit tag '" + std::string(tag) + "'");
}

double to_si(double value, std::string_view tag) {
    const auto c = lookup(tag);
    return value * c.scale + c.offset;
}

double from_si(double value, std::string_view tag) {
    const auto c = lookup(tag);
    return (value - c.offset) / c.scale;
}

}  // namespace sysid::units
