// etaqfi: analyze a single θ, sweep a θ-grid, or run the verification suite.
//
// exit codes: 0 ok, 2 config error, 3 numerical failure, 4 verification failure

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "etaqfi/sweep.hpp"
#include "etaqfi/verify.hpp"

namespace fs = std::filesystem;
using namespace etaqfi;

namespace {

enum Exit : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_verify = 4 };

fs::path resolve(const std::string& out_dir, const std::string& file) {
    const fs::path p(file);
    if (p.is_absolute() || out_dir.empty()) return p;
    return fs::path(out_dir) / p;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::config_error, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::config_error, "write failed for '" + path.string() + "'");
}

int cmd_analyze(const std::string& config, const std::string& out_dir) {
    const JobSpec job = load_job(config);
    const Json report = analyze_report(job);
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!job.report.empty() || !out_dir.empty()) {
        write_file(resolve(out_dir, job.report.empty() ? job.name + ".report.json" : job.report), text);
    }
    return exit_ok;
}

int cmd_sweep(const std::string& config, const std::string& preset_name, const std::string& out_dir,
              unsigned workers) {
    if (config.empty() == preset_name.empty()) {
        throw Error(ErrorCode::config_error, "sweep: give exactly one of <config.json> or --preset NAME");
    }
    JobSpec job = preset_name.empty() ? load_job(config) : preset(preset_name);
    if (!job.range) throw Error(ErrorCode::config_error, "theta_min/theta_max/theta_points: required for a sweep");

    const SweepResult result = run_sweep(job, workers);
    std::ostringstream csv;
    write_csv(csv, result.rows, job.sqfi_mode);
    const fs::path csv_path = resolve(out_dir, job.csv.empty() ? job.name + ".csv" : job.csv);
    const fs::path report_path = resolve(out_dir, job.report.empty() ? job.name + ".report.json" : job.report);
    write_file(csv_path, csv.str());
    const Json report = sweep_report(result);
    write_file(report_path, report.dump(2) + "\n");

    const auto& s = report["summary"];
    std::printf("%s: %zu rows (%zu flagged, %zu failed), max cqfi %s at θ = %s, duality deviation %.3g\n",
                job.name.c_str(), result.rows.size(), s["flagged"].get<std::size_t>(), s["failed"].get<std::size_t>(),
                s["max_cqfi"].dump().c_str(), s["argmax_theta"].dump().c_str(),
                s["duality_max_deviation"].get<double>());
    std::printf("wrote %s and %s\n", csv_path.string().c_str(), report_path.string().c_str());
    return exit_ok;
}

int cmd_verify(bool full, std::uint64_t seed, unsigned workers) {
    VerifyOptions opt;
    opt.level = full ? VerifyLevel::full : VerifyLevel::fast;
    opt.seed = seed;
    opt.workers = workers;
    const VerifyReport rep = run_verify(opt);
    print_report(std::cout, rep);
    return rep.passed() ? exit_ok : exit_verify;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Standard and covariant quantum Fisher information for pseudo-Hermitian Hamiltonians", "etaqfi"};
    app.set_version_flag("--version", std::string(ETAQFI_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir;
    unsigned workers = 1;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--workers", workers, "Worker threads for sweeps")->check(CLI::Range(1u, 256u));
    app.add_option("--seed", seed, "Seed for randomized verification fixtures");

    std::string config, preset_name;
    bool full = false;
    auto* analyze = app.add_subcommand("analyze", "Single-θ analysis with metric diagnostics");
    analyze->add_option("config", config, "Job config (JSON)")->required();
    auto* sweep = app.add_subcommand("sweep", "θ-sweep to CSV and a JSON report");
    sweep->add_option("config", config, "Job config (JSON)");
    sweep->add_option("--preset", preset_name, "figure1a, figure1b, multiplicative or pt-bound");
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    verify->add_flag("--full", full, "Full level (larger case counts, 400-point figure sweeps)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*analyze) return cmd_analyze(config, out_dir);
        if (*sweep) return cmd_sweep(config, preset_name, out_dir, workers);
        return cmd_verify(full, seed, workers);
    } catch (const Error& e) {
        std::cerr << "etaqfi: " << e.what() << '\n';
        return e.code() == ErrorCode::config_error ? exit_config : exit_numerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "etaqfi: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "etaqfi: " << e.what() << '\n';
        return exit_numerical;
    }
}
