// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysid/pipeline.hpp"
#include "sysid/verify.hpp"

using namespace sysid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "sysid_acceptance" / name;
    fs::remove_all(p);
    return p;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// Worst relative errors of a sweep against the truth oracle at Mach 0.7.
struct SweepError {
    double omega = 0.0;
    double zeta = 0.0;
};

SweepError sweep_error(const SweepResult& s, const std::vector<double>& qbars) {
    const TruthAircraft ac = TruthAircraft::from_prior(fixture_truth_like());
    SweepError e;
    for (const auto& row : s.rows) {
        if (std::abs(row.mach - 0.7) > 1e-12) continue;
        if (std::find(qbars.begin(), qbars.end(), row.qbar) == qbars.end()) continue;
        const ShortPeriodResult t = truth_short_period(ac, row.qbar, 0.7);
        if (row.flag != "oscillatory") {
            e.omega = e.zeta = INFINITY;
            continue;
        }
        e.omega = std::max(e.omega, std::abs(row.omega - t.omega_sp) / t.omega_sp);
        e.zeta = std::max(e.zeta, std::abs(row.zeta - t.zeta_sp) / t.zeta_sp);
    }
    return e;
}

Outcome from_checks(const std::vector<verify::Check>& checks) {
    Outcome o{true, ""};
    for (const auto& c : checks) {
        o.passed = o.passed && c.passed;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += c.name + fmt(" %.2e (bound %.0e)", c.measured, c.bound);
    }
    return o;
}

// Criterion 2 runs first; its sweep CSV is reused by criterion 10.
std::string first_run_csv;

Outcome criterion1() {
    const ReferenceFixture f = reference_fixture();
    const auto shipped = nlohmann::json::parse(slurp(SYSID_DATA_DIR "/fixtures/reference_table.json"));
    bool same = shipped.at("rows").size() == f.rows.size();
    for (std::size_t i = 0; same && i < f.rows.size(); ++i) {
        const auto& r = shipped["rows"][i];
        same = r.at("method") == f.rows[i].method && r.at("cm_alpha") == f.rows[i].cm_alpha &&
               r.at("omega_sp") == f.rows[i].omega && r.at("zeta_sp") == f.rows[i].zeta;
    }
    const auto report = nlohmann::json::parse(compare_to_fixture({}, f));
    const bool labelled = report.at("status").get<std::string>().find("not an acceptance test") != std::string::npos;
    return {same && labelled,
            "flight-test values need T-38 data; the reference table ships as a report fixture only, criteria 2-10 "
            "are the synthetic substitute"};
}

Outcome criterion2() {
    RunConfig c = default_config();
    c.output_dir = fresh_dir("run_a").string();
    const auto t0 = std::chrono::steady_clock::now();
    const RunSummary s = run_experiment(c);
    const double wall = seconds_since(t0);
    first_run_csv = slurp(fs::path(c.output_dir) / "sweep.csv");
    const SweepError e = sweep_error(s.sweep, c.sweep.qbar_values());
    return {e.omega <= 0.05 && e.zeta <= 0.15 && wall <= 120.0,
            fmt("omega %.2f%% (bound 5%%), zeta %.2f%% (bound 15%%), wall %.1f s (bound 120 s)", 100 * e.omega,
                100 * e.zeta, wall)};
}

Outcome criterion3() {
    RunConfig c = default_config();
    c.maneuvers = {rollercoaster_at(8000.0), rollercoaster_at(24000.0)};
    c.output_dir = fresh_dir("run_interp").string();
    const RunSummary s = run_experiment(c);
    const SweepError e = sweep_error(s.sweep, {16000.0});
    return {e.omega <= 0.07, fmt("omega at 16 kPa %.2f%% (bound 7%%), zeta %.2f%% (reported)", 100 * e.omega, 100 * e.zeta)};
}

Outcome criterion8() {
    RunConfig c = default_config();
    c.maneuvers = {rollercoaster_at(16000.0, 0.7, 60.0)};
    const PreparedPrior prior = forward_process(c);
    SimulationOutput sim = simulate(c);
    const InverseResult r = inverse_process(c, prior, {sim.records.at(0).measured}, sim.shots);
    double fit_seconds = NAN;
    for (const auto& t : r.timings)
        if (t.stage == "fit") fit_seconds = t.seconds;
    const std::size_t n = std::max(r.cm.size(), r.cz.size());
    return {n <= 1500 && fit_seconds <= 5.0,
            fmt("Cm and Cz fits on %.0f points from one 60 s maneuver took %.3f s (bound 5 s)",
                static_cast<double>(n), fit_seconds)};
}

Outcome criterion10() {
    RunConfig c = default_config();
    c.output_dir = fresh_dir("run_b").string();
    run_experiment(c);
    const std::string second = slurp(fs::path(c.output_dir) / "sweep.csv");
    const bool same = !first_run_csv.empty() && second == first_run_csv;
    return {same, fmt("%.0f bytes compared across two runs of the default config", static_cast<double>(second.size()))};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 reference results documented, not reproduced", criterion1},
        {"2 end-to-end recovery with a wrong prior", criterion2},
        {"3 prediction between flown conditions", criterion3},
        {"4 GP correctness",
         [] { return from_checks({verify::gp_dense_inverse(1, 50), verify::gp_interpolation(1), verify::gp_zero_data(1)}); }},
        {"5 posterior gradient vs finite differences",
         [] {
             return from_checks({verify::gp_gradient_fd(KernelKind::NeuralNetwork, 1, 20),
                                 verify::gp_gradient_fd(KernelKind::SquaredExponential, 1, 20)});
         }},
        {"6 closed-form short period vs eigen oracle",
         [] { return from_checks({verify::short_period_eigen(1, 1000), verify::short_period_reduction(1)}); }},
        {"7 trim regression",
         [] { return from_checks({verify::trim_exact_recovery(), verify::trim_noise_recovery(1, 100)}); }},
        {"8 near-real-time fit budget", criterion8},
        {"9 simulator fidelity",
         [] {
             const auto rk = verify::rk4_order();
             Outcome o = from_checks({verify::trim_drift(), verify::doublet_response()});
             o.passed = o.passed && rk.passed;
             o.detail = rk.name + fmt(" %.2f (required in [14, 18]); ", rk.measured) + o.detail;
             return o;
         }},
        {"10 determinism", criterion10},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s  criterion %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failures += o.passed ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
