#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sysid/aeromean.hpp"
#include "sysid/flightdata.hpp"

namespace sysid {

struct SimState {
    double u = 0.0;      // m/s
    double w = 0.0;      // m/s
    double q = 0.0;      // rad/s
    double theta = 0.0;  // rad
    double h = 0.0;      // m

    double alpha() const;
    double airspeed() const;
    double rho() const;
    double qbar() const;
    double mach() const;
};

struct TruthAircraft {
    GenericAeroModel cm;
    GenericAeroModel cz;
    AircraftGeometry geom;
    DragClosure drag;

    static TruthAircraft from_prior(const PriorCatalogEntry& e);
};

using StateRate = std::array<double, 5>;  // (u, w, q, theta, h) derivatives

StateRate dynamics(const TruthAircraft& ac, const SimState& s, double delta_e, double thrust);
double load_factor(const TruthAircraft& ac, const SimState& s, double delta_e);

struct TrimResult {
    SimState state;
    double alpha = 0.0;
    double delta_e = 0.0;
    double thrust = 0.0;
    double mach = 0.0;
    double qbar = 0.0;
    double rho = 0.0;
    double residual = 0.0;  // max |(u_dot, w_dot, q_dot)|
    int iterations = 0;
};

// Level-flight trim by damped Newton on (alpha, delta_e, thrust).
TrimResult solve_trim(const TruthAircraft& ac, double mach, double altitude);

struct NoiseSpec {
    double sigma_rates = 0.0;    // rad/s, applied to p, q, r
    double sigma_alpha = 0.0;    // rad
    double sigma_delta_e = 0.0;  // rad
    double sigma_qbar = 0.0;     // Pa
    std::uint64_t seed = 0;

    bool is_zero() const;
};

enum class ManeuverKind { Rollercoaster, Doublet, TrimShot };

struct ManeuverSpec {
    ManeuverKind kind = ManeuverKind::Rollercoaster;
    double duration = 30.0;  // s
    double g_low = 0.0;
    double g_high = 2.0;
    double g_rate = 0.5;     // g/s
    double mach_target = 0.7;
    double altitude_target = 6000.0;  // m
    double dt = 0.01;                 // sample and integration step, s
    double doublet_amplitude = 0.01;  // rad
    double doublet_width = 1.0;       // s, per half
    double doublet_start = 1.0;       // s

    void validate() const;
};

// Simulator output: measured channels plus the noise-free truth.
struct SimRecord {
    ManeuverRecord measured;
    ManeuverRecord truth;
    std::vector<double> qdot;  // exact state derivatives at each sample
    std::vector<double> wdot;
    std::vector<double> altitude;  // m
    TrimResult trim;
};

using ElevatorSchedule = std::function<double(double t)>;

SimRecord integrate(const TruthAircraft& ac, const SimState& initial, const ElevatorSchedule& elevator,
                    double thrust, double dt, double duration);

// Smoothed triangle between g_low and g_high: mid-ramp slope is g_rate and the
// peaks reach the bounds exactly. Faded in from 1 g over the first 2 s.
double rollercoaster_command(const ManeuverSpec& spec, double t);

SimRecord fly_rollercoaster(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise);
SimRecord fly_doublet(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise);
SimRecord fly_trim_hold(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise);
SimRecord fly(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise);

std::vector<TrimShot> fly_trim_shots(const TruthAircraft& ac,
                                     const std::vector<std::pair<double, double>>& mach_altitude,
                                     const NoiseSpec& noise);

ManeuverRecord apply_noise(const ManeuverRecord& rec, const NoiseSpec& noise);

// Sigmas set to a fraction of each channel's peak-to-peak excursion in rec.
NoiseSpec noise_from_fraction(const ManeuverRecord& rec, double fraction, std::uint64_t seed);

}  // namespace sysid
