#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/aeromean.hpp"
#include "sysid/dynsim.hpp"
#include "sysid/flightdata.hpp"
#include "sysid/gpr.hpp"
#include "sysid/lineardyn.hpp"
#include "sysid/trimfit.hpp"

namespace sysid {

enum class RunMode { Simulation, Replay };

struct SweepGrid {
    double qbar_min = 8000.0;
    double qbar_max = 24000.0;
    double qbar_step = 1000.0;
    std::vector<double> mach{0.7};

    std::vector<double> qbar_values() const;
};

struct RunConfig {
    RunMode mode = RunMode::Simulation;
    std::string prior = "fixture:wrong-prior";  // path or fixture:<name>
    std::string truth = "fixture:truth-like";   // simulation mode
    std::vector<std::string> telemetry;         // replay mode
    ColumnMap columns = default_column_map();
    std::string trim_shot_file;                 // replay mode, optional if records hold steady windows

    std::vector<ManeuverSpec> maneuvers;
    double trim_shot_mach = 0.7;
    std::vector<double> trim_shot_qbar{7000, 9500, 12000, 14500, 17000, 19500, 22000, 24500, 27000};

    // Noise: sigma as a fraction of each channel's peak-to-peak, or explicit sigmas.
    std::optional<double> noise_fraction = 0.01;
    NoiseSpec noise;

    KernelSpec kernel;
    std::optional<double> nu_cm;  // unset: estimate from data
    std::optional<double> nu_cz;
    std::size_t max_points = 1500;
    std::size_t input_smoothing = 21;  // samples; 1 disables
    double radius2 = 0.1;
    bool incremental = false;
    std::vector<MachBucket> mach_buckets = default_mach_buckets();
    SweepGrid sweep;
    std::string output_dir = "run";
    std::uint64_t seed = 1;

    void validate() const;
};

// Default simulation config: rollercoasters at 8, 16 and 24 kPa, Mach 0.7.
RunConfig default_config();
RunConfig config_from_json(const std::string& text, const std::string& base_dir = ".");
std::string config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// Altitude giving the requested qbar at the requested Mach.
ManeuverSpec rollercoaster_at(double qbar, double mach = 0.7, double duration = 30.0);

PriorCatalogEntry resolve_prior(const std::string& ref);

struct PreparedPrior {
    PriorCatalogEntry entry;
    MeanFunction cm;
    MeanFunction cz;
    KernelSpec kernel;
    std::vector<Channel> coverage;
};

PreparedPrior forward_process(const RunConfig& config);

struct SimulationOutput {
    std::vector<SimRecord> records;
    std::vector<TrimShot> shots;
};

SimulationOutput simulate(const RunConfig& config);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct InverseResult {
    GpModel cm;
    GpModel cz;
    std::vector<TrimFunctions> trim;
    double nu_cm = 0.0;
    double nu_cz = 0.0;
    std::vector<StageTiming> timings;
};

InverseResult inverse_process(const RunConfig& config, const PreparedPrior& prior,
                              const std::vector<ManeuverRecord>& records, const std::vector<TrimShot>& shots);

struct StabilityAtPoint {
    TrimPoint trim;
    CoefficientDerivatives coefficients;
    DimensionalDerivatives dimensional;  // M_alpha_dot = M_q / 3
    double sigma_cm = 0.0;
};

StabilityAtPoint stability_derivatives_at(const GpModel& cm, const GpModel& cz, const TrimFunctions& tf,
                                          double qbar, double rho, const AircraftGeometry& geom);

// Density at (qbar, Mach) on the standard atmosphere.
double density_for(double qbar, double mach);

struct SweepRow {
    double qbar = 0.0;
    double mach = 0.0;
    double omega = 0.0;
    double zeta = 0.0;
    double cm_alpha = 0.0;
    double cm_q_nd = 0.0;
    double cm_delta_e = 0.0;
    double cz_alpha = 0.0;
    double sigma_cm = 0.0;
    std::string flag;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

SweepResult sweep_short_period(const GpModel& cm, const GpModel& cz, const std::vector<TrimFunctions>& tfs,
                               const AircraftGeometry& geom, const std::vector<double>& qbars,
                               const std::vector<double>& machs, bool parallel = true);
std::string sweep_csv(const SweepResult& s);

// Truth short period at (qbar, Mach): solve_trim, linearize, same M_q/3 closed form.
ShortPeriodResult truth_short_period(const TruthAircraft& ac, double qbar, double mach);

struct ReferenceRow {
    std::string method;
    double cm_alpha, cm_delta_e, cm_q, omega, zeta;
};

struct ReferenceFixture {
    std::string label;
    double mach = 0.7;
    double altitude_ft = 32000.0;
    std::vector<ReferenceRow> rows;
};

ReferenceFixture reference_fixture();
std::string compare_to_fixture(const SweepResult& sweep, const ReferenceFixture& fixture);

struct RunSummary {
    std::string directory;
    SweepResult sweep;
    std::vector<StageTiming> timings;
};

RunSummary run_experiment(const RunConfig& config);

// Checkpoint directory: model_cm.json, model_cz.json, trim_functions.json, prior.json.
void save_fitted(const std::string& dir, const InverseResult& r, const PriorCatalogEntry& prior);
struct FittedBundle {
    GpModel cm;
    GpModel cz;
    std::vector<TrimFunctions> trim;
    PriorCatalogEntry prior;
};
FittedBundle load_fitted(const std::string& dir);

}  // namespace sysid
