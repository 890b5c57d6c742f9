#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ipstab/ipstab.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ipstab;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string force_integrator;
    double step = 0.0;
    double horizon = 0.0;
};

fs::path output_root(const RunConfig& cfg) {
    const fs::path root = cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir);
    fs::create_directories(root);
    return root;
}

void emit(const ojson& doc) { std::cout << doc.dump(2) << '\n'; }

RunConfig load(const CliOptions& opt) {
    RunConfig cfg = load_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.force_integrator.empty()) cfg.simulation.integrator = opt.force_integrator;
    if (opt.step > 0.0) cfg.simulation.step = opt.step;
    if (opt.horizon > 0.0) cfg.simulation.horizon = opt.horizon;
    return cfg;
}

int cmd_analyze(const CliOptions& opt) {
    const RunConfig cfg = load(opt);
    const ojson doc = report_analyze(cfg);
    emit(doc);
    write_text_atomic(output_root(cfg) / "analyze.json", doc.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const CliOptions& opt) {
    const RunConfig cfg = load(opt);
    const Trajectory traj = run_simulation(cfg);
    const ojson doc = report_simulate(cfg, traj);
    emit(doc);
    const fs::path root = output_root(cfg);
    write_text_atomic(root / "summary.json", doc.dump(2) + "\n");
    write_text_atomic(root / "trajectory.csv", trajectory_csv(traj));
    return 0;
}

int cmd_roots(const CliOptions& opt) {
    const RunConfig cfg = load(opt);
    const RootsReport report = report_roots(cfg);
    emit(report.doc);
    const fs::path root = output_root(cfg);
    write_text_atomic(root / "roots.json", report.doc.dump(2) + "\n");
    write_text_atomic(root / "chains.csv", report.chains_csv);
    return 0;
}

int cmd_tune(const CliOptions& opt) {
    const RunConfig cfg = load(opt);
    const ojson doc = report_tune(cfg);
    emit(doc);
    write_text_atomic(output_root(cfg) / "tune.json", doc.dump(2) + "\n");
    return 0;
}

void add_common(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.config_path, "JSON run configuration")
        ->required()
        ->type_name("<path>");
    sub->add_option("--out", opt.out_dir, "output directory (default: current directory)")
        ->type_name("<dir>");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"analysis and simulation of proportional control loops with input delay"};
    app.set_version_flag("--version", "0.1.0");
    app.require_subcommand(1);

    CliOptions opt;

    CLI::App* analyze = app.add_subcommand("analyze", "stability verdict with certificate");
    add_common(analyze, opt);

    CLI::App* simulate = app.add_subcommand("simulate", "trajectory plus decay summary");
    add_common(simulate, opt);
    simulate
        ->add_option("--force-integrator", opt.force_integrator,
                     "bypass the automatic choice")
        ->check(CLI::IsMember({"loop", "neutral", "advanced", "sampled"}))
        ->type_name("<name>");
    simulate->add_option("--step", opt.step, "integration step override")
        ->check(CLI::PositiveNumber)
        ->type_name("<s>");
    simulate->add_option("--horizon", opt.horizon, "simulation horizon override")
        ->check(CLI::PositiveNumber)
        ->type_name("<s>");

    CLI::App* roots = app.add_subcommand("roots", "characteristic root chains and counts");
    add_common(roots, opt);

    CLI::App* tune = app.add_subcommand("tune", "certified gain grid search");
    add_common(tune, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage problems share the config-error exit
    }

    try {
        if (analyze->parsed()) return cmd_analyze(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (roots->parsed()) return cmd_roots(opt);
        return cmd_tune(opt);
    } catch (const Error& e) {
        std::fprintf(stderr, "ipstab: %s\n", e.what());
        return e.is_numeric() ? 3 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ipstab: %s\n", e.what());
        return 2;
    }
}
