#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace sysid {

inline constexpr std::size_t kStateDim = 8;

// Index layout of the GP input vector.
enum StateIndex : std::size_t { kMach = 0, kRho, kQbar, kP, kQ, kR, kAlpha, kDeltaE };

struct FlightState {
    double mach = 0.0;
    double rho = 0.0;      // kg/m^3
    double qbar = 0.0;     // Pa
    double p = 0.0;        // rad/s
    double q = 0.0;        // rad/s
    double r = 0.0;        // rad/s
    double alpha = 0.0;    // rad
    double delta_e = 0.0;  // rad

    std::array<double, kStateDim> to_array() const;
    static FlightState from_array(const std::array<double, kStateDim>& a);
    double true_airspeed() const;  // sqrt(2 qbar / rho)
    void validate() const;
};

struct AircraftGeometry {
    double S = 0.0;     // m^2
    double cbar = 0.0;  // m
    double mass = 0.0;  // kg
    double Iy = 0.0;
    double Ix = 0.0;
    double Iz = 0.0;
    double Ixz = 0.0;
    double cg = 0.25;  // fraction of cbar

    void validate() const;
};

enum class Channel { Cm, Cz };
const char* to_string(Channel c);
Channel channel_from_string(const std::string& s);

struct CoefficientSample {
    FlightState x;
    double y = 0.0;
    Channel channel = Channel::Cm;
};

struct ManeuverRecord {
    std::vector<double> t;
    std::vector<FlightState> states;
    // Optional channels; empty when absent.
    std::vector<double> u_body;
    std::vector<double> w_body;
    std::vector<double> theta;
    std::vector<double> nz;
    std::vector<double> cm_target;
    std::vector<double> cz_target;

    std::size_t size() const { return t.size(); }
    // Equal channel lengths, increasing time, spacing within 10% of the median.
    void validate() const;
    double median_dt() const;
};

// Column mapping for telemetry files. Keys are canonical channel names
// (time, mach, rho, altitude, oat, qbar, p, q, r, alpha, delta_e, u_body,
// w_body, theta, nz, cm_target, cz_target).
struct ColumnSpec {
    std::string column;
    std::string unit;
};
using ColumnMap = std::map<std::string, ColumnSpec>;

// Identity map with SI tags for every canonical channel.
ColumnMap default_column_map();

ManeuverRecord ingest_csv(const std::string& path, const ColumnMap& columns = default_column_map());
void export_csv(const ManeuverRecord& rec, const std::string& path);

// Degree of the window-5 local polynomial used by coefficient extraction.
inline constexpr int kStencilDegree = 2;

// Window-5 local polynomial derivative (degree 2 or 3); one-sided fits at the ends.
std::vector<double> sg_derivative(const std::vector<double>& t, const std::vector<double>& y,
                                  int degree = kStencilDegree);

// Fill cm_target and cz_target (if u/w/theta exist) from the state channels.
void attach_targets(ManeuverRecord& rec, const AircraftGeometry& geom);

// Stored targets are returned if present, otherwise computed from the states.
std::vector<CoefficientSample> extract_cm(const ManeuverRecord& rec, const AircraftGeometry& geom);
std::vector<CoefficientSample> extract_cz(const ManeuverRecord& rec, const AircraftGeometry& geom);

ManeuverRecord decimate(const ManeuverRecord& rec, std::size_t max_points);

// Cubic local-polynomial smoothing of the eight GP input channels over an odd
// window; coefficient targets and kinematic channels are left untouched.
// window <= 1 returns the record unchanged.
ManeuverRecord smooth_inputs(const ManeuverRecord& rec, std::size_t window);

}  // namespace sysid

namespace sysid {

// One steady-state observation used for trim-function regression.
struct TrimShot {
    FlightState state;
    double alpha_trim = 0.0;
    double delta_e_trim = 0.0;
};

}  // namespace sysid
