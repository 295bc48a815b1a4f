#pragma once

// Experiment orchestration: one channel realization per seed, the shared
// receiver front end, and one equalizer/sensing/metrics pass per bit width.

#include "sopfx/channel.hpp"
#include "sopfx/metrics.hpp"
#include "sopfx/rxdsp.hpp"
#include "sopfx/sigproc.hpp"
#include "sopfx/sopsense.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sopfx::harness {

struct RxConfig {
    bool gsop = true;
    bool coarse_cfo = true;
    std::optional<double> deskew_samples;
    rx::GardnerConfig gardner;
    bool fine_cfo = true;
    rx::BpsConfig bps;
    double mu_dd = 1e-3;
    /// Leading equalized symbols excluded from EVM / BER.
    std::int64_t measure_skip_symbols = std::int64_t{1} << 16;
};

struct SensingConfig {
    sop::JonesVector probe{cplx{1.0}, cplx{0.0}};
    sop::JonesMode jones_mode = sop::JonesMode::DcResponse;
    sop::ProbeSide probe_side = sop::ProbeSide::Row;
    /// Leading symbols (equalizer acquisition) excluded from the Stokes analysis.
    std::int64_t skip_symbols = std::int64_t{1} << 16;
};

struct PsdConfig {
    std::size_t segment_len = std::size_t{1} << 15;
    double overlap = 0.5;
    int guard_bins = 3;
    int harmonics = 3;
};

struct OutputConfig {
    /// Row decimation for the tap and Stokes CSV exports.
    int export_stride = 16;
    bool export_frame = false;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    std::vector<int> sweep_widths{5, 6, 7, 8};
    bool include_float = true;
    int int_bits = 2;
    fx::Rounding rounding = fx::Rounding::NearestTiesAway;
    double q_threshold_db = 12.6;
    channel::ChannelConfig channel;
    rx::EqConfig eq;
    RxConfig rx;
    SensingConfig sensing;
    PsdConfig psd;
    OutputConfig output;

    /// Throws ConfigError.
    void validate() const;
    /// Equalizer config for one sweep entry (width 0 = float).
    rx::EqConfig eq_for_width(int width) const;
};

/// Output of the receiver stages shared by every sweep entry.
struct FrontEnd {
    DualPolFrame symbols; ///< 1 sa/sy, input of the equalizer
    rx::CfoEstimate coarse_cfo;
    std::uint64_t checksum = 0;
};

/// gsop -> deskew -> coarse CFO -> matched filter -> Gardner timing.
FrontEnd run_front_end(const DualPolFrame& frame, const ExperimentConfig& cfg);

/// FNV-1a over the raw sample bytes.
std::uint64_t frame_checksum(const DualPolFrame& frame);

struct WidthResult {
    std::string label; ///< "float" or "W<n>"
    int width = 0;     ///< 0 for float
    bool ok = true;
    std::string failure;

    metrics::CommReport comm;
    std::optional<metrics::BerDirect> direct;
    double angular_rmse_deg = 0.0;
    double noise_floor_s1 = 0.0;
    double noise_floor_s2 = 0.0;
    double psd_peak_freq_s1 = 0.0;
    double psd_peak_freq_s2 = 0.0;
    std::uint64_t saturation_events = 0;
    std::uint64_t singularity_resets = 0;
    std::optional<metrics::ComplexityReport> complexity;
    std::uint64_t frame_checksum = 0;

    rx::TapTrajectory taps;
    std::vector<std::int64_t> stokes_symbol_index;
    sop::StokesTrajectory stokes; ///< rotated to the north pole
    dsp::PsdEstimate psd_s1;
    dsp::PsdEstimate psd_s2;
};

struct RunReport {
    std::uint64_t seed = 0;
    double tone_freq = 0.0; ///< expected vibration line, cycles per SOP sample
    rx::CfoEstimate coarse_cfo;
    std::vector<WidthResult> rows;
    std::optional<channel::GroundTruth> truth;
};

/// Equalizer, carrier recovery, metrics and sensing for one sweep entry.
/// `truth` enables direct bit counting. Diagnostic errors are recorded in the
/// row instead of propagating.
WidthResult run_width(const FrontEnd& fe, const ExperimentConfig& cfg, int width,
                      const channel::GroundTruth* truth);

/// Angular RMSE of every row against the float row (when present).
void fill_angular_rmse(RunReport& report);

/// Whole experiment on an already captured 2+ sa/sy frame.
RunReport run_on_frame(const DualPolFrame& frame, const ExperimentConfig& cfg, const channel::GroundTruth* truth,
                       int jobs = 1);

/// Channel realization for cfg.seed followed by run_on_frame.
RunReport run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn);

// ---------------------------------------------------------------------------
// Commands

/// Runs the experiment and writes the output tree into cfg.output_dir.
RunReport cmd_simulate(const ExperimentConfig& cfg, int jobs = 1);

struct SweepSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<RunReport> runs;
};

/// cmd_simulate over seeds seed, seed + 1, ... into <output>/seed_<s>/ plus an
/// aggregated sweep_summary.csv with per-width means and standard deviations.
SweepSummary cmd_sweep(const ExperimentConfig& cfg, int repeat, int jobs = 1);

enum class IngestFormat { Float32, Csv };

/// Reads XI, XQ, YI, YQ records. Throws InvalidInput on malformed or truncated files.
DualPolFrame cmd_ingest(const std::filesystem::path& path, IngestFormat format, Rational samples_per_symbol);

/// Writes a frame as little-endian float32 XI, XQ, YI, YQ records.
void write_frame_f32(const DualPolFrame& frame, const std::filesystem::path& path);
void write_frame_csv(const DualPolFrame& frame, const std::filesystem::path& path);

/// Brings an ingested frame to 2 sa/sy with the rational resampler.
DualPolFrame to_two_sps(const DualPolFrame& frame);

/// Writes the plot data and report.md for a run directory into <run_dir>/report.
/// Throws InvalidInput naming the first missing artifact.
void cmd_report(const std::filesystem::path& run_dir);

/// Writes summary.csv and the per-width CSVs of a report.
void write_run(const RunReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// True when any row failed.
bool any_failed(const RunReport& report);

} // namespace sopfx::harness

#include "sopfx/detail/parallel.hpp"
