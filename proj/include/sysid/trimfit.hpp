#pragma once

#include <string>
#include <vector>

#include "sysid/flightdata.hpp"

namespace sysid {

struct MachBucket {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double mach) const { return mach >= lo && mach < hi; }
};

// Low, moderate, high and supersonic regions, each +-0.1 wide.
std::vector<MachBucket> default_mach_buckets();

// alpha_trim = a exp(-b qbar), delta_e_trim = c + d ln(qbar), qbar in Pa.
struct TrimFunctions {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    MachBucket bucket;
    double qbar_min = 0.0;
    double qbar_max = 0.0;
    double rms_alpha = 0.0;
    double rms_delta_e = 0.0;
    std::size_t shots = 0;
    std::string qbar_unit = "Pa";

    double alpha(double qbar) const;
    double delta_e(double qbar) const;
};

struct TrimPoint {
    FlightState state;  // p = q = r = 0
    double U1 = 0.0;
    double Theta1 = 0.0;
};

std::vector<TrimFunctions> fit_trim_functions(const std::vector<TrimShot>& shots,
                                              const std::vector<MachBucket>& buckets = default_mach_buckets());

// Refuses qbar below 0.8 qbar_min or above 1.2 qbar_max.
TrimPoint trim_state(const TrimFunctions& tf, double qbar, double rho);

const TrimFunctions& select_trim_functions(const std::vector<TrimFunctions>& tfs, double mach);

std::vector<TrimShot> read_trim_shots_csv(const std::string& path);
void write_trim_shots_csv(const std::vector<TrimShot>& shots, const std::string& path);

// Steady windows: every sample in a window_s span has |p|, |q|, |r| below rate_tol.
std::vector<TrimShot> detect_trim_shots(const ManeuverRecord& rec, double window_s = 5.0, double rate_tol = 0.005);

std::string trim_functions_to_json(const std::vector<TrimFunctions>& tfs);
std::vector<TrimFunctions> trim_functions_from_json(const std::string& text);

}  // namespace sysid
