#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sysid/flightdata.hpp"

namespace sysid {

struct Exponents {
    int alpha = 0;
    int qtilde = 0;
    int delta_e = 0;
    bool operator==(const Exponents&) const = default;
};

struct Term {
    double theta = 0.0;
    Exponents e;
};

struct Range {
    double min = 0.0;
    double max = 0.0;
    bool contains(double v) const { return v >= min && v <= max; }
};

struct Hull {
    Range alpha{-0.17, 0.35};
    Range qtilde{-0.05, 0.05};
    Range delta_e{-0.30, 0.30};
};

// Arguments of the polynomial model.
struct AeroPoint {
    double alpha = 0.0;
    double qtilde = 0.0;
    double delta_e = 0.0;
};

// qtilde = Q cbar / (2 V), V = sqrt(2 qbar / rho).
AeroPoint project(const FlightState& x, double cbar);

struct GenericAeroModel {
    Channel channel = Channel::Cm;
    std::vector<Term> terms;
    Hull hull;

    void validate() const;
    bool in_hull(const AeroPoint& p) const;
    // Unchecked polynomial evaluation and partials (alpha, qtilde, delta_e).
    double value(const AeroPoint& p) const;
    std::array<double, 3> partials(const AeroPoint& p) const;
};

// Checked evaluation: throws HullError outside the validity hull.
double evaluate(const GenericAeroModel& m, const AeroPoint& p);
double evaluate(const GenericAeroModel& m, const FlightState& x, double cbar);
std::array<double, 3> gradient(const GenericAeroModel& m, const AeroPoint& p);
std::array<double, 3> gradient(const GenericAeroModel& m, const FlightState& x, double cbar);

// Axial force closure Cx(alpha) = cx0 + cx_alpha2 alpha^2, used only by the simulator.
struct DragClosure {
    double cx0 = -0.025;
    double cx_alpha2 = -0.6;
    double cx(double alpha) const { return cx0 + cx_alpha2 * alpha * alpha; }
};

struct PriorCatalogEntry {
    std::string name;
    std::optional<GenericAeroModel> cm;
    std::optional<GenericAeroModel> cz;
    AircraftGeometry geometry;
    std::optional<DragClosure> drag;
};

PriorCatalogEntry load_prior(const std::string& path);
void save_prior(const PriorCatalogEntry& entry, const std::string& path);
std::string prior_to_json(const PriorCatalogEntry& entry);
PriorCatalogEntry prior_from_json(const std::string& text);
std::string model_to_json_text(const GenericAeroModel& m);
GenericAeroModel model_from_json_text(const std::string& text);

// Canonical term sets: Cm over (1, a, q, d, aq, a^2q, a^2d, a^3q, a^3d, a^4); Cz over (1, a, q, d, a^2, a^3).
std::vector<Exponents> canonical_cm_terms();
std::vector<Exponents> canonical_cz_terms();
GenericAeroModel make_model(Channel c, const std::vector<Exponents>& e, const std::vector<double>& theta,
                            const Hull& hull = {});

AircraftGeometry fixture_geometry();
PriorCatalogEntry fixture_truth_like();
PriorCatalogEntry fixture_wrong_prior();

}  // namespace sysid
