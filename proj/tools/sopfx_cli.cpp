// sopfx: simulate, sweep, ingest and report front end.

#include "sopfx/config.hpp"
#include "sopfx/error.hpp"
#include "sopfx/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace sopfx;
using namespace sopfx::harness;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON configuration file");
    cmd->add_option("--seed", c.seed, "Base seed (overrides the config)");
    cmd->add_option("--jobs", c.jobs, "Parallel sweep entries")->check(CLI::PositiveNumber);
    cmd->add_option("--output", c.output, "Output directory (overrides the config)");
    cmd->allow_extras();
}

ExperimentConfig build_config(const Common& c, const std::vector<std::string>& extras) {
    std::vector<std::string> overrides;
    for (const std::string& e : extras) {
        if (e.rfind("--", 0) != 0 || e.find('=') == std::string::npos) {
            throw ConfigError("unrecognized argument '" + e + "' (overrides look like --section.key=value)");
        }
        overrides.push_back(e);
    }
    if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
    if (!c.output.empty()) overrides.push_back("output_dir=\"" + c.output + "\"");
    std::optional<std::filesystem::path> path;
    if (!c.config.empty()) path = c.config;
    return load_config(path, overrides);
}

void print_report(const RunReport& r) {
    for (const auto& row : r.rows) {
        std::cout << row.label << ": ";
        if (!row.ok) {
            std::cout << "FAILED (" << row.failure << ")\n";
            continue;
        }
        std::cout << "Q " << row.comm.q_db << " dB, EVM " << row.comm.evm_rms;
        if (row.comm.ber_direct) std::cout << ", BER " << *row.comm.ber_direct;
        std::cout << ", angular RMSE " << row.angular_rmse_deg << " deg, S1 floor "
                  << 10.0 * std::log10(row.noise_floor_s1) << " dB\n";
    }
}

Rational parse_sps(const std::string& s) {
    const auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(s));
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    } catch (const std::logic_error&) {
        throw ConfigError("--sps must be an integer or p/q, got '" + s + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-point CMA equalizer and SOP sensing experiments"};
    app.require_subcommand(1);

    Common sim;
    auto* simulate = app.add_subcommand("simulate", "Run the channel and the receiver for every bit width");
    add_common(simulate, sim);

    Common swp;
    int repeat = 5;
    auto* sweep = app.add_subcommand("sweep", "Repeat simulate over consecutive seeds and aggregate");
    add_common(sweep, swp);
    sweep->add_option("--repeat", repeat, "Number of seeds")->check(CLI::PositiveNumber);

    Common ing;
    std::string input;
    std::string format = "f32";
    std::string sps = "2";
    auto* ingest = app.add_subcommand("ingest", "Process a captured dual-polarization frame");
    add_common(ingest, ing);
    ingest->add_option("--input", input, "Capture file")->required();
    ingest->add_option("--format", format, "f32 (little-endian XI,XQ,YI,YQ) or csv")
        ->check(CLI::IsMember({"f32", "csv"}));
    ingest->add_option("--sps", sps, "Samples per symbol of the capture, integer or p/q");

    std::string run_dir;
    auto* report = app.add_subcommand("report", "Emit plot data and a markdown table for a run directory");
    report->add_option("run_dir", run_dir, "Run directory written by simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            const ExperimentConfig cfg = build_config(sim, simulate->remaining());
            const RunReport r = cmd_simulate(cfg, sim.jobs);
            print_report(r);
            std::cout << "wrote " << cfg.output_dir << "\n";
            return any_failed(r) ? 3 : 0;
        }
        if (sweep->parsed()) {
            const ExperimentConfig cfg = build_config(swp, sweep->remaining());
            const SweepSummary s = cmd_sweep(cfg, repeat, swp.jobs);
            bool failed = false;
            for (std::size_t i = 0; i < s.runs.size(); ++i) {
                std::cout << "seed " << s.seeds[i] << "\n";
                print_report(s.runs[i]);
                failed = failed || any_failed(s.runs[i]);
            }
            std::cout << "wrote " << cfg.output_dir << "/sweep_summary.csv\n";
            return failed ? 3 : 0;
        }
        if (ingest->parsed()) {
            const ExperimentConfig cfg = build_config(ing, ingest->remaining());
            const DualPolFrame frame =
                cmd_ingest(input, format == "csv" ? IngestFormat::Csv : IngestFormat::Float32, parse_sps(sps));
            std::filesystem::create_directories(cfg.output_dir);
            const RunReport r = run_on_frame(frame, cfg, nullptr, ing.jobs);
            write_run(r, cfg, cfg.output_dir);
            print_report(r);
            std::cout << "wrote " << cfg.output_dir << "\n";
            return any_failed(r) ? 3 : 0;
        }
        if (report->parsed()) {
            cmd_report(run_dir);
            std::cout << "wrote " << (std::filesystem::path(run_dir) / "report").string() << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DiagnosticError& e) {
        std::cerr << "pipeline failure: " << e.what() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
