#include "sysid/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sysid/errors.hpp"
#include "sysid/pipeline.hpp"
#include "sysid/verify.hpp"

namespace sysid {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string checkpoint;
    double qbar = 16000.0;
    double mach = 0.7;
    std::optional<std::size_t> points;
};

RunConfig make_config(const Options& o) {
    RunConfig c = o.config.empty() ? default_config() : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.points) c.max_points = *o.points;
    c.validate();
    return c;
}

std::pair<std::vector<ManeuverRecord>, std::vector<TrimShot>> gather_data(const RunConfig& c) {
    std::vector<ManeuverRecord> records;
    std::vector<TrimShot> shots;
    if (c.mode == RunMode::Simulation) {
        SimulationOutput sim = simulate(c);
        for (auto& r : sim.records) records.push_back(std::move(r.measured));
        shots = std::move(sim.shots);
    } else {
        for (const auto& p : c.telemetry) records.push_back(ingest_csv(p, c.columns));
        if (!c.trim_shot_file.empty()) shots = read_trim_shots_csv(c.trim_shot_file);
    }
    return {std::move(records), std::move(shots)};
}

void print_row(const SweepRow& r) {
    std::printf("qbar_pa         %.17g\n", r.qbar);
    std::printf("mach            %.17g\n", r.mach);
    std::printf("omega_sp_rad_s  %.17g\n", r.omega);
    std::printf("zeta_sp         %.17g\n", r.zeta);
    std::printf("cm_alpha        %.17g\n", r.cm_alpha);
    std::printf("cm_q_nd         %.17g\n", r.cm_q_nd);
    std::printf("cm_delta_e      %.17g\n", r.cm_delta_e);
    std::printf("cz_alpha        %.17g\n", r.cz_alpha);
    std::printf("sigma_cm        %.17g\n", r.sigma_cm);
    std::printf("flag            %s\n", r.flag.c_str());
}

int cmd_simulate(const Options& o) {
    RunConfig c = make_config(o);
    if (c.mode != RunMode::Simulation) throw UsageError("simulate needs a simulation-mode config");
    const fs::path dir = o.out.empty() ? fs::path("telemetry") : fs::path(o.out);
    fs::create_directories(dir);
    const SimulationOutput sim = simulate(c);
    for (std::size_t i = 0; i < sim.records.size(); ++i) {
        const auto path = dir / ("record_" + std::to_string(i) + ".csv");
        export_csv(sim.records[i].measured, path.string());
        std::cout << "wrote " << path.string() << "\n";
    }
    write_trim_shots_csv(sim.shots, (dir / "trim_shots.csv").string());
    std::cout << "wrote " << (dir / "trim_shots.csv").string() << "\n";
    return 0;
}

int cmd_fit(const Options& o) {
    const RunConfig c = make_config(o);
    const PreparedPrior prior = forward_process(c);
    auto [records, shots] = gather_data(c);
    const InverseResult inv = inverse_process(c, prior, records, shots);
    const std::string dir = o.out.empty() ? c.output_dir : o.out;
    save_fitted(dir, inv, prior.entry);
    for (const auto& t : inv.timings) std::printf("%-28s %.3f s\n", t.stage.c_str(), t.seconds);
    std::cout << "checkpoint written to " << dir << "\n";
    return 0;
}

int cmd_query(const Options& o) {
    if (o.checkpoint.empty()) throw UsageError("query needs --checkpoint <dir>");
    const FittedBundle b = load_fitted(o.checkpoint);
    const SweepResult s = sweep_short_period(b.cm, b.cz, b.trim, b.prior.geometry, {o.qbar}, {o.mach});
    print_row(s.rows.at(0));
    return s.rows[0].flag.rfind("error", 0) == 0 ? 3 : 0;
}

int cmd_sweep(const Options& o) {
    if (o.checkpoint.empty()) throw UsageError("sweep needs --checkpoint <dir>");
    const RunConfig c = o.config.empty() ? default_config() : load_config(o.config);
    const FittedBundle b = load_fitted(o.checkpoint);
    const SweepResult s =
        sweep_short_period(b.cm, b.cz, b.trim, b.prior.geometry, c.sweep.qbar_values(), c.sweep.mach);
    const std::string csv = sweep_csv(s);
    if (o.out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream(o.out) << csv;
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

int cmd_verify(const Options& o) {
    bool ok = true;
    for (const auto& c : verify::run_all(o.seed.value_or(1))) {
        std::cout << verify::format(c) << "\n";
        ok = ok && c.passed;
    }
    std::cout << (ok ? "all property suites passed\n" : "property suite failure\n");
    return ok ? 0 : 3;
}

int cmd_report(const Options& o) {
    SweepResult s;
    if (!o.checkpoint.empty()) {
        const FittedBundle b = load_fitted(o.checkpoint);
        const ReferenceFixture f = reference_fixture();
        s = sweep_short_period(b.cm, b.cz, b.trim, b.prior.geometry, {o.qbar}, {f.mach});
    }
    std::cout << compare_to_fixture(s, reference_fixture());
    return 0;
}

int cmd_run(const Options& o) {
    const RunSummary r = run_experiment(make_config(o));
    for (const auto& t : r.timings) std::printf("%-40s %.3f s\n", t.stage.c_str(), t.seconds);
    std::cout << "run directory " << r.directory << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Flight-test system identification with physics-prior Gaussian processes", "sysid"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--out", o.out, "Output directory or file");
    };
    auto* simulate_cmd = app.add_subcommand("simulate", "Fly the truth model and write telemetry CSVs");
    add_common(simulate_cmd);
    auto* fit_cmd = app.add_subcommand("fit", "Fit GP models and trim functions, write a checkpoint directory");
    add_common(fit_cmd);
    fit_cmd->add_option("--points", o.points, "Decimation limit per record");
    auto* query_cmd = app.add_subcommand("query", "Stability derivatives and short period at one condition");
    query_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
    query_cmd->add_option("--qbar", o.qbar, "Dynamic pressure, Pa")->required();
    query_cmd->add_option("--mach", o.mach, "Mach number")->required();
    auto* sweep_cmd = app.add_subcommand("sweep", "Short-period sweep over the configured grid");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
    auto* verify_cmd = app.add_subcommand("verify", "Run the property suites");
    verify_cmd->add_option("--seed", o.seed, "Random seed");
    auto* report_cmd = app.add_subcommand("report", "Reference-table comparison (documentation only)");
    report_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint directory");
    report_cmd->add_option("--qbar", o.qbar, "Dynamic pressure at the reference condition, Pa");
    auto* run_cmd = app.add_subcommand("run", "End-to-end experiment into a run directory");
    add_common(run_cmd);
    run_cmd->add_option("--points", o.points, "Decimation limit per record");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(o);
        if (fit_cmd->parsed()) return cmd_fit(o);
        if (query_cmd->parsed()) return cmd_query(o);
        if (sweep_cmd->parsed()) return cmd_sweep(o);
        if (verify_cmd->parsed()) return cmd_verify(o);
        if (report_cmd->parsed()) return cmd_report(o);
        if (run_cmd->parsed()) return cmd_run(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    std::cerr << app.help();
    return 1;
}

}  // namespace sysid
