#include "sopfx/harness.hpp"

#include "sopfx/config.hpp"
#include "sopfx/csv.hpp"
#include "sopfx/error.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sopfx::harness {

namespace fs = std::filesystem;

namespace {

double to_db(double v) { return v > 0.0 ? 10.0 * std::log10(v) : -INFINITY; }

std::string width_label(int width) { return width == 0 ? "float" : "W" + std::to_string(width); }

void normalize_power(CVec& v, std::size_t begin) {
    if (begin >= v.size()) return;
    double p = 0.0;
    for (std::size_t i = begin; i < v.size(); ++i) p += std::norm(v[i]);
    p /= static_cast<double>(v.size() - begin);
    if (p <= 0.0) throw DiagnosticError("equalized signal has zero power");
    const double g = 1.0 / std::sqrt(p);
    for (cplx& s : v) s *= g;
}

void sense(WidthResult& row, const rx::CmaResult& cma, const ExperimentConfig& cfg, int snap_stride) {
    const auto& snaps = cma.trajectory.snapshots;
    sop::StokesTrajectory raw;
    raw.sample_rate_norm = 1.0 / snap_stride;
    for (const auto& s : snaps) {
        if (s.symbol_index < cfg.sensing.skip_symbols) continue;
        const sop::JonesMatrix j = sop::taps_to_jones(s.h, cfg.sensing.jones_mode);
        raw.samples.push_back(sop::probe_stokes(j, cfg.sensing.probe, cfg.sensing.probe_side));
        row.stokes_symbol_index.push_back(s.symbol_index);
    }
    if (raw.samples.empty()) throw DiagnosticError("no tap snapshots after sensing.skip_symbols");
    const sop::Vec3 c = sop::centroid(raw);
    row.stokes = sop::rotate_to_north_pole(raw, c);
    auto [s1, s2] = sop::remove_dc(row.stokes);

    const double tone = cfg.channel.vib_freq_norm * snap_stride;
    row.psd_s1 = dsp::welch_psd(s1, cfg.psd.segment_len, cfg.psd.overlap);
    row.psd_s2 = dsp::welch_psd(s2, cfg.psd.segment_len, cfg.psd.overlap);
    const double binw = row.psd_s1.bin_width();
    const auto excl = dsp::default_floor_exclusions(tone, binw, cfg.psd.guard_bins, cfg.psd.harmonics);
    row.noise_floor_s1 = dsp::noise_floor(row.psd_s1, excl);
    row.noise_floor_s2 = dsp::noise_floor(row.psd_s2, excl);
    const double min_freq = 1.5 * binw;
    row.psd_peak_freq_s1 = row.psd_s1.freqs[dsp::peak_bin(row.psd_s1, min_freq)];
    row.psd_peak_freq_s2 = row.psd_s2.freqs[dsp::peak_bin(row.psd_s2, min_freq)];
}

void measure(WidthResult& row, const rx::CmaResult& cma, const ExperimentConfig& cfg,
             const channel::GroundTruth* truth) {
    DualPolFrame eq = cma.symbols;
    if (cfg.rx.fine_cfo) {
        const rx::CfoEstimate fine = rx::cfo_estimate(eq);
        eq = rx::cfo_compensate(eq, fine.cfo_norm);
    }
    eq.x_pol = rx::bps_recover(eq.x_pol, cfg.rx.bps).symbols;
    eq.y_pol = rx::bps_recover(eq.y_pol, cfg.rx.bps).symbols;
    const std::size_t skip = static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.rx.measure_skip_symbols));
    normalize_power(eq.x_pol, skip);
    normalize_power(eq.y_pol, skip);
    DualPolFrame dd = rx::ddlms_run(eq, cfg.rx.mu_dd).symbols;
    normalize_power(dd.x_pol, skip);
    normalize_power(dd.y_pol, skip);
    if (skip >= dd.size()) throw DiagnosticError("rx.measure_skip_symbols leaves no symbols to measure");

    CVec both;
    both.reserve(2 * (dd.size() - skip));
    both.insert(both.end(), dd.x_pol.begin() + static_cast<std::ptrdiff_t>(skip), dd.x_pol.end());
    both.insert(both.end(), dd.y_pol.begin() + static_cast<std::ptrdiff_t>(skip), dd.y_pol.end());
    row.comm.evm_rms = metrics::evm_rms(both);
    row.comm.ber_est = metrics::ber_from_evm(row.comm.evm_rms);
    row.comm.q_db = metrics::qfactor_db(std::clamp(row.comm.ber_est, 1e-300, 0.4999999));
    row.comm.n_symbols_measured = static_cast<std::int64_t>(both.size());

    if (truth) {
        const std::span<const cplx> rx_x(dd.x_pol.data() + skip, dd.size() - skip);
        const std::span<const cplx> rx_y(dd.y_pol.data() + skip, dd.size() - skip);
        const std::size_t tb = std::min(truth->tx_bits_x.size(), 2 * skip);
        const std::span<const std::uint8_t> tx_x(truth->tx_bits_x.data() + tb, truth->tx_bits_x.size() - tb);
        const std::span<const std::uint8_t> tx_y(truth->tx_bits_y.data() + tb, truth->tx_bits_y.size() - tb);
        row.direct = metrics::ber_direct(rx_x, rx_y, tx_x, tx_y);
        row.comm.ber_direct = row.direct->ber;
    }
}

} // namespace

void ExperimentConfig::validate() const {
    if (sweep_widths.empty() && !include_float) throw ConfigError("sweep_widths is empty and include_float is false");
    for (int w : sweep_widths) {
        if (w < 4 || w > 32) throw ConfigError("sweep width " + std::to_string(w) + " outside [4, 32]");
        if (int_bits >= w) throw ConfigError("eq.int_bits must be below every sweep width");
    }
    if (int_bits < 1) throw ConfigError("eq.int_bits must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    channel.validate();
    rx::EqConfig probe = eq;
    probe.arithmetic.reset();
    probe.validate();
    for (int w : sweep_widths) eq_for_width(w).validate();
    if (rx.measure_skip_symbols < 0) throw ConfigError("rx.measure_skip_symbols must be >= 0");
    if (rx.bps.n_test < 1 || rx.bps.block < 1) throw ConfigError("rx.bps_n_test and rx.bps_block must be >= 1");
    if (!(rx.mu_dd >= 0.0)) throw ConfigError("rx.mu_dd must be >= 0");
    if (!(rx.gardner.kp >= 0.0 && rx.gardner.ki >= 0.0)) throw ConfigError("rx.gardner gains must be >= 0");
    if (psd.segment_len < 16) throw ConfigError("psd.segment_len must be >= 16");
    if (!(psd.overlap >= 0.0 && psd.overlap < 1.0)) throw ConfigError("psd.overlap must be in [0, 1)");
    if (psd.guard_bins < 0 || psd.harmonics < 0) throw ConfigError("psd.guard_bins and psd.harmonics must be >= 0");
    if (output.export_stride < 1) throw ConfigError("output.export_stride must be >= 1");
    if (std::norm(sensing.probe[0]) + std::norm(sensing.probe[1]) == 0.0) {
        throw ConfigError("sensing.probe must be nonzero");
    }
    if (sensing.skip_symbols < 0) throw ConfigError("sensing.skip_symbols must be >= 0");
    if (!std::isfinite(q_threshold_db)) throw ConfigError("q_threshold_db must be finite");
}

rx::EqConfig ExperimentConfig::eq_for_width(int width) const {
    rx::EqConfig e = eq;
    if (width == 0) {
        e.arithmetic.reset();
    } else {
        e.arithmetic = fx::FxFormat(width, int_bits, rounding);
    }
    return e;
}

std::uint64_t frame_checksum(const DualPolFrame& frame) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const CVec& v) {
        const auto* p = reinterpret_cast<const unsigned char*>(v.data());
        const std::size_t n = v.size() * sizeof(cplx);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    feed(frame.x_pol);
    feed(frame.y_pol);
    return h;
}

FrontEnd run_front_end(const DualPolFrame& frame, const ExperimentConfig& cfg) {
    frame.validate();
    if (frame.samples_per_symbol != Rational(2)) throw InvalidInput("front end expects 2 sa/sy input");
    DualPolFrame f = frame;
    FrontEnd fe;
    if (cfg.rx.gsop) f = rx::gsop_orthogonalize(f);
    if (cfg.rx.deskew_samples) f = rx::deskew(f, *cfg.rx.deskew_samples);
    if (cfg.rx.coarse_cfo) {
        fe.coarse_cfo = rx::cfo_estimate(f);
        f = rx::cfo_compensate(f, fe.coarse_cfo.cfo_norm);
    }
    f = dsp::fir_filter(f, dsp::rrc_taps(cfg.channel.rolloff, cfg.channel.rrc_span, 2));
    fe.symbols = rx::gardner_timing(f, cfg.rx.gardner).frame;
    fe.checksum = frame_checksum(fe.symbols);
    return fe;
}

WidthResult run_width(const FrontEnd& fe, const ExperimentConfig& cfg, int width, const channel::GroundTruth* truth) {
    WidthResult row;
    row.width = width;
    row.label = width_label(width);
    row.frame_checksum = frame_checksum(fe.symbols);
    const rx::EqConfig eq = cfg.eq_for_width(width);
    if (width > 0) row.complexity = metrics::complexity_report(eq, width);
    try {
        rx::CmaResult cma = rx::cma_run(fe.symbols, eq);
        row.saturation_events = cma.diagnostics.saturation_events;
        row.singularity_resets = cma.diagnostics.singularity_resets;
        sense(row, cma, cfg, eq.effective_snapshot_stride());

        auto& snaps = cma.trajectory.snapshots;
        std::vector<rx::TapSnapshot> kept;
        const auto stride = static_cast<std::size_t>(cfg.output.export_stride);
        kept.reserve(snaps.size() / stride + 1);
        for (std::size_t i = 0; i < snaps.size(); i += stride) kept.push_back(std::move(snaps[i]));
        snaps.clear();
        snaps.shrink_to_fit();
        row.taps.snapshots = std::move(kept);
        row.taps.sop_sample_rate_norm = cma.trajectory.sop_sample_rate_norm / static_cast<double>(stride);

        measure(row, cma, cfg, truth);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        row.ok = false;
        row.failure = e.what();
    }
    return row;
}

void fill_angular_rmse(RunReport& report) {
    const WidthResult* ref = nullptr;
    for (const auto& r : report.rows) {
        if (r.width == 0 && r.ok) ref = &r;
    }
    for (auto& r : report.rows) {
        if (!r.ok) continue;
        if (r.width == 0) {
            r.angular_rmse_deg = 0.0;
            continue;
        }
        if (!ref) {
            r.angular_rmse_deg = std::nan("");
            continue;
        }
        try {
            r.angular_rmse_deg = sop::angular_rmse(ref->stokes, r.stokes);
        } catch (const InvalidInput& e) {
            r.ok = false;
            r.failure = e.what();
        }
    }
}

DualPolFrame to_two_sps(const DualPolFrame& frame) {
    frame.validate();
    const Rational sps = frame.samples_per_symbol;
    if (sps == Rational(2)) return frame;
    // ratio 2 / sps = (2 den) / num
    const Rational r(2 * sps.den, sps.num);
    DualPolFrame out = dsp::resample_rational(frame, static_cast<int>(r.num), static_cast<int>(r.den));
    out.samples_per_symbol = Rational(2);
    return out;
}

RunReport run_on_frame(const DualPolFrame& frame, const ExperimentConfig& cfg, const channel::GroundTruth* truth,
                       int jobs) {
    cfg.validate();
    const FrontEnd fe = run_front_end(to_two_sps(frame), cfg);
    RunReport report;
    report.seed = cfg.seed;
    report.coarse_cfo = fe.coarse_cfo;
    report.tone_freq = cfg.channel.vib_freq_norm * cfg.eq.effective_snapshot_stride();

    std::vector<int> widths = cfg.sweep_widths;
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
    if (cfg.include_float) widths.insert(widths.begin(), 0);
    report.rows.resize(widths.size());
    parallel_for(widths.size(), jobs, [&](std::size_t i) { report.rows[i] = run_width(fe, cfg, widths[i], truth); });
    fill_angular_rmse(report);
    return report;
}

RunReport run_experiment(const ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    channel::ChannelConfig ch = cfg.channel;
    ch.seed = cfg.seed;
    channel::ChannelOutput out = channel::run_channel(ch, cfg.sensing.probe);
    RunReport report = run_on_frame(out.frame, cfg, &out.truth, jobs);
    report.truth = std::move(out.truth);
    return report;
}

bool any_failed(const RunReport& report) {
    return std::any_of(report.rows.begin(), report.rows.end(), [](const WidthResult& r) { return !r.ok; });
}

namespace {

const std::vector<std::string> kSummaryHeader = {
    "label",          "width",          "status",           "evm_rms",           "ber_est",
    "ber_direct",     "q_db",           "angular_rmse_deg", "noise_floor_s1",    "noise_floor_s1_db",
    "noise_floor_s2", "noise_floor_s2_db", "psd_peak_freq_s1", "psd_peak_freq_s2", "tone_freq",
    "saturation_events", "singularity_resets", "real_mults", "real_adds",       "add_cost",
    "mult_cost",      "weighted_cost",  "n_symbols_measured", "frame_checksum",  "failure"};

std::string opt(const std::optional<double>& v) { return v ? csv::fmt(*v) : ""; }

std::string hex64(std::uint64_t v) {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = d[v & 15];
        v >>= 4;
    }
    return s;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

void write_summary(const RunReport& report, const fs::path& path) {
    csv::Writer w(path, kSummaryHeader);
    for (const auto& r : report.rows) {
        std::vector<std::string> c;
        c.push_back(r.label);
        c.push_back(csv::fmt(r.width));
        c.push_back(r.ok ? "ok" : "failed");
        if (r.ok) {
            c.push_back(csv::fmt(r.comm.evm_rms));
            c.push_back(csv::fmt(r.comm.ber_est));
            c.push_back(opt(r.comm.ber_direct));
            c.push_back(csv::fmt(r.comm.q_db));
            c.push_back(csv::fmt(r.angular_rmse_deg));
            c.push_back(csv::fmt(r.noise_floor_s1));
            c.push_back(csv::fmt(to_db(r.noise_floor_s1)));
            c.push_back(csv::fmt(r.noise_floor_s2));
            c.push_back(csv::fmt(to_db(r.noise_floor_s2)));
            c.push_back(csv::fmt(r.psd_peak_freq_s1));
            c.push_back(csv::fmt(r.psd_peak_freq_s2));
        } else {
            for (int i = 0; i < 11; ++i) c.emplace_back();
        }
        c.push_back(csv::fmt(report.tone_freq));
        c.push_back(csv::fmt(r.saturation_events));
        c.push_back(csv::fmt(r.singularity_resets));
        if (r.complexity) {
            c.push_back(csv::fmt(r.complexity->total.real_mults));
            c.push_back(csv::fmt(r.complexity->total.real_adds));
            c.push_back(csv::fmt(r.complexity->add_cost));
            c.push_back(csv::fmt(r.complexity->mult_cost));
            c.push_back(csv::fmt(r.complexity->weighted_cost));
        } else {
            for (int i = 0; i < 5; ++i) c.emplace_back();
        }
        c.push_back(r.ok ? csv::fmt(r.comm.n_symbols_measured) : "");
        c.push_back(hex64(r.frame_checksum));
        c.push_back(sanitize(r.failure));
        w.row(c);
    }
}

void write_stokes(const WidthResult& r, int stride, const fs::path& path) {
    csv::Writer w(path, {"index", "symbol_index", "S1", "S2", "S3"});
    const auto step = static_cast<std::size_t>(stride);
    for (std::size_t i = 0; i < r.stokes.samples.size(); i += step) {
        const auto& s = r.stokes.samples[i];
        w.row({csv::fmt(static_cast<std::int64_t>(i)), csv::fmt(r.stokes_symbol_index[i]), csv::fmt(s[0]),
               csv::fmt(s[1]), csv::fmt(s[2])});
    }
}

void write_psd(const WidthResult& r, const fs::path& path) {
    csv::Writer w(path, {"freq", "psd_s1", "psd_s2"});
    for (std::size_t i = 0; i < r.psd_s1.freqs.size(); ++i) {
        w.row({csv::fmt(r.psd_s1.freqs[i]), csv::fmt(r.psd_s1.power[i]), csv::fmt(r.psd_s2.power[i])});
    }
}

void write_taps(const WidthResult& r, const fs::path& path) {
    static const char* names[4] = {"h_xx", "h_xy", "h_yx", "h_yy"};
    std::vector<std::string> header{"symbol_index"};
    const std::size_t n = r.taps.snapshots.empty() ? 0 : r.taps.snapshots.front().h[0].size();
    for (int p = 0; p < 4; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            header.push_back(std::string(names[p]) + "_" + std::to_string(k) + "_re");
            header.push_back(std::string(names[p]) + "_" + std::to_string(k) + "_im");
        }
    }
    csv::Writer w(path, header);
    for (const auto& s : r.taps.snapshots) {
        w << csv::fmt(s.symbol_index);
        for (const auto& h : s.h) {
            for (const cplx& v : h) w << v.real() << v.imag();
        }
        w.end_row();
    }
}

void write_truth(const channel::GroundTruth& t, int stride, const fs::path& path) {
    csv::Writer w(path, {"index", "symbol_index", "S1", "S2", "S3"});
    const auto step = static_cast<std::size_t>(stride);
    for (std::size_t i = 0; i < t.stokes_of_t.samples.size(); i += step) {
        const auto& s = t.stokes_of_t.samples[i];
        w.row({csv::fmt(static_cast<std::int64_t>(i)), csv::fmt(t.truth_symbol_index[i]), csv::fmt(s[0]),
               csv::fmt(s[1]), csv::fmt(s[2])});
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot create " + path.string());
    out << text;
}

} // namespace

void write_run(const RunReport& report, const ExperimentConfig& cfg, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text(dir / "config.json", config_to_json(cfg));
    write_summary(report, dir / "summary.csv");
    {
        csv::Writer w(dir / "front_end.csv", {"seed", "coarse_cfo_norm", "cfo_bin_width", "cfo_peak_ratio",
                                              "cfo_low_confidence", "tone_freq"});
        w.row({csv::fmt(report.seed), csv::fmt(report.coarse_cfo.cfo_norm), csv::fmt(report.coarse_cfo.bin_width),
               csv::fmt(report.coarse_cfo.peak_ratio), report.coarse_cfo.low_confidence ? "1" : "0",
               csv::fmt(report.tone_freq)});
    }
    for (const auto& r : report.rows) {
        if (!r.ok) continue;
        write_stokes(r, cfg.output.export_stride, dir / ("stokes_" + r.label + ".csv"));
        write_psd(r, dir / ("psd_" + r.label + ".csv"));
        write_taps(r, dir / ("taps_" + r.label + ".csv"));
    }
    if (report.truth) write_truth(*report.truth, cfg.output.export_stride, dir / "truth_stokes.csv");
}

RunReport cmd_simulate(const ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    // Fail on an unwritable destination before the expensive part.
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
    RunReport report;
    if (cfg.output.export_frame) {
        channel::ChannelConfig ch = cfg.channel;
        ch.seed = cfg.seed;
        channel::ChannelOutput out = channel::run_channel(ch, cfg.sensing.probe);
        write_frame_f32(out.frame, fs::path(cfg.output_dir) / "frame.f32");
        report = run_on_frame(out.frame, cfg, &out.truth, jobs);
        report.truth = std::move(out.truth);
    } else {
        report = run_experiment(cfg, jobs);
    }
    write_run(report, cfg, cfg.output_dir);
    return report;
}

SweepSummary cmd_sweep(const ExperimentConfig& cfg, int repeat, int jobs) {
    if (repeat < 1) throw ConfigError("repeat must be >= 1");
    cfg.validate();
    SweepSummary sum;
    for (int i = 0; i < repeat; ++i) {
        ExperimentConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(i);
        c.channel.seed = c.seed;
        c.output_dir = (fs::path(cfg.output_dir) / ("seed_" + std::to_string(c.seed))).string();
        RunReport r = cmd_simulate(c, jobs);
        r.truth.reset();
        for (auto& row : r.rows) {
            row.taps.snapshots.clear();
            row.stokes.samples.clear();
            row.stokes_symbol_index.clear();
        }
        sum.seeds.push_back(c.seed);
        sum.runs.push_back(std::move(r));
    }

    struct Acc {
        std::vector<double> v[8];
        std::size_t failures = 0;
    };
    static const char* metric_names[8] = {"evm_rms", "ber_est", "ber_direct", "q_db", "angular_rmse_deg",
                                          "noise_floor_s1_db", "noise_floor_s2_db", "saturation_events"};
    std::map<int, Acc> acc;
    std::map<int, std::string> labels;
    for (const auto& run : sum.runs) {
        for (const auto& r : run.rows) {
            Acc& a = acc[r.width];
            labels[r.width] = r.label;
            if (!r.ok) {
                ++a.failures;
                continue;
            }
            a.v[0].push_back(r.comm.evm_rms);
            a.v[1].push_back(r.comm.ber_est);
            if (r.comm.ber_direct) a.v[2].push_back(*r.comm.ber_direct);
            a.v[3].push_back(r.comm.q_db);
            a.v[4].push_back(r.angular_rmse_deg);
            a.v[5].push_back(to_db(r.noise_floor_s1));
            a.v[6].push_back(to_db(r.noise_floor_s2));
            a.v[7].push_back(static_cast<double>(r.saturation_events));
        }
    }
    std::vector<std::string> header{"label", "width", "runs", "failures"};
    for (const char* m : metric_names) {
        header.push_back(std::string(m) + "_mean");
        header.push_back(std::string(m) + "_std");
    }
    csv::Writer w(fs::path(cfg.output_dir) / "sweep_summary.csv", header);
    for (const auto& [width, a] : acc) {
        std::vector<std::string> c{labels[width], csv::fmt(width), csv::fmt(static_cast<std::int64_t>(repeat)),
                                   csv::fmt(static_cast<std::int64_t>(a.failures))};
        for (const auto& v : a.v) {
            if (v.empty()) {
                c.emplace_back();
                c.emplace_back();
                continue;
            }
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
            c.push_back(csv::fmt(mean));
            c.push_back(csv::fmt(sd));
        }
        w.row(c);
    }
    return sum;
}

void write_frame_f32(const DualPolFrame& frame, const fs::path& path) {
    frame.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot create " + path.string());
    std::vector<unsigned char> buf(frame.size() * 16);
    auto put = [&](std::size_t off, double v) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) buf[off + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
    };
    for (std::size_t i = 0; i < frame.size(); ++i) {
        put(16 * i, frame.x_pol[i].real());
        put(16 * i + 4, frame.x_pol[i].imag());
        put(16 * i + 8, frame.y_pol[i].real());
        put(16 * i + 12, frame.y_pol[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_frame_csv(const DualPolFrame& frame, const fs::path& path) {
    frame.validate();
    csv::Writer w(path, {"xi", "xq", "yi", "yq"});
    for (std::size_t i = 0; i < frame.size(); ++i) {
        w.row({csv::fmt(frame.x_pol[i].real()), csv::fmt(frame.x_pol[i].imag()), csv::fmt(frame.y_pol[i].real()),
               csv::fmt(frame.y_pol[i].imag())});
    }
}

DualPolFrame cmd_ingest(const fs::path& path, IngestFormat format, Rational samples_per_symbol) {
    DualPolFrame f;
    f.samples_per_symbol = samples_per_symbol;
    if (format == IngestFormat::Float32) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InvalidInput("cannot open " + path.string());
        std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (buf.size() % 16 != 0) {
            throw InvalidInput(path.string() + ": truncated record (" + std::to_string(buf.size()) +
                               " bytes is not a multiple of 16)");
        }
        if (buf.empty()) throw InvalidInput(path.string() + ": no samples");
        const std::size_t n = buf.size() / 16;
        f.x_pol.resize(n);
        f.y_pol.resize(n);
        auto get = [&](std::size_t off) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= std::uint32_t{buf[off + static_cast<std::size_t>(b)]} << (8 * b);
            const float v = std::bit_cast<float>(bits);
            if (!std::isfinite(v)) throw InvalidInput(path.string() + ": non-finite sample at byte " + std::to_string(off));
            return static_cast<double>(v);
        };
        for (std::size_t i = 0; i < n; ++i) {
            f.x_pol[i] = cplx{get(16 * i), get(16 * i + 4)};
            f.y_pol[i] = cplx{get(16 * i + 8), get(16 * i + 12)};
        }
    } else {
        std::ifstream probe(path);
        if (!probe) throw InvalidInput("cannot open " + path.string());
        std::string first;
        std::getline(probe, first);
        bool header = false;
        for (char c : first) {
            if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E') header = true;
        }
        probe.close();
        const csv::Table t = csv::read(path, header);
        if (t.rows.empty()) throw InvalidInput(path.string() + ": no samples");
        if (t.rows.front().size() != 4) throw InvalidInput(path.string() + ": expected 4 columns XI,XQ,YI,YQ");
        f.x_pol.resize(t.rows.size());
        f.y_pol.resize(t.rows.size());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            const std::string where = path.string() + " row " + std::to_string(i + 1);
            f.x_pol[i] = cplx{csv::parse_double(r[0], where), csv::parse_double(r[1], where)};
            f.y_pol[i] = cplx{csv::parse_double(r[2], where), csv::parse_double(r[3], where)};
        }
    }
    f.validate();
    return f;
}

void cmd_report(const fs::path& run_dir) {
    auto need = [&](const fs::path& p) {
        if (!fs::exists(p)) throw InvalidInput("missing run artifact: " + p.string());
        return p;
    };
    const csv::Table summary = csv::read(need(run_dir / "summary.csv"));
    const std::size_t c_label = summary.column("label");
    const std::size_t c_width = summary.column("width");
    const std::size_t c_status = summary.column("status");
    const std::size_t c_rmse = summary.column("angular_rmse_deg");
    const std::size_t c_q = summary.column("q_db");

    struct Row {
        std::string label;
        int width;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows;
    for (const auto& r : summary.rows) {
        if (r[c_status] != "ok") continue;
        rows.push_back({r[c_label], static_cast<int>(csv::parse_double(r[c_width], "summary.csv width")), r});
    }
    double threshold = 12.6;
    {
        std::ifstream in(need(run_dir / "config.json"));
        std::stringstream ss;
        ss << in.rdbuf();
        threshold = parse_config(ss.str()).q_threshold_db;
    }
    std::vector<csv::Table> psd;
    std::vector<csv::Table> stokes;
    for (const auto& r : rows) {
        psd.push_back(csv::read(need(run_dir / ("psd_" + r.label + ".csv"))));
        stokes.push_back(csv::read(need(run_dir / ("stokes_" + r.label + ".csv"))));
    }

    const fs::path out = run_dir / "report";
    fs::create_directories(out);
    {
        std::ofstream f(out / "rmse_vs_width.dat", std::ios::binary);
        f << "# width angular_rmse_deg\n";
        for (const auto& r : rows) {
            if (r.width > 0) f << r.width << ' ' << r.cells[c_rmse] << '\n';
        }
    }
    {
        std::ofstream f(out / "q_vs_width.dat", std::ios::binary);
        f << "# width q_db threshold_db (width 0 = float)\n";
        for (const auto& r : rows) f << r.width << ' ' << r.cells[c_q] << ' ' << csv::fmt(threshold) << '\n';
    }
    {
        std::ofstream f(out / "psd_overlay.dat", std::ios::binary);
        f << "# freq";
        for (const auto& r : rows) f << " s1_" << r.label << " s2_" << r.label;
        f << '\n';
        const std::size_t n = psd.empty() ? 0 : psd.front().rows.size();
        for (std::size_t k = 0; k < n; ++k) {
            f << psd.front().rows[k][0];
            for (const auto& t : psd) {
                if (t.rows.size() != n) throw InvalidInput("PSD files in " + run_dir.string() + " differ in length");
                f << ' ' << t.rows[k][1] << ' ' << t.rows[k][2];
            }
            f << '\n';
        }
    }
    {
        std::ofstream f(out / "s2_timeseries.dat", std::ios::binary);
        f << "# symbol_index";
        for (const auto& r : rows) f << " s2_" << r.label;
        f << '\n';
        const std::size_t n = stokes.empty() ? 0 : stokes.front().rows.size();
        for (std::size_t k = 0; k < n; ++k) {
            f << stokes.front().rows[k][1];
            for (const auto& t : stokes) {
                if (t.rows.size() != n) throw InvalidInput("Stokes files in " + run_dir.string() + " differ in length");
                f << ' ' << t.rows[k][3];
            }
            f << '\n';
        }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::ofstream f(out / ("poincare_" + rows[i].label + ".dat"), std::ios::binary);
        f << "# S1 S2 S3\n";
        for (const auto& r : stokes[i].rows) f << r[2] << ' ' << r[3] << ' ' << r[4] << '\n';
    }
    {
        std::ofstream f(out / "report.md", std::ios::binary);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char ts[32];
        std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &tm);
        f << "# Run report\n\nGenerated " << ts << " from `" << run_dir.string() << "`.\n\n";
        f << "| width | Q (dB) | EVM | BER est | BER direct | angular RMSE (deg) | S1 floor (dB) | S2 floor (dB) | "
             "S1 peak | saturations | weighted cost |\n";
        f << "|---|---|---|---|---|---|---|---|---|---|---|\n";
        auto col = [&](const Row& r, const char* name) { return r.cells[summary.column(name)]; };
        for (const auto& r : rows) {
            f << "| " << r.label << " | " << col(r, "q_db") << " | " << col(r, "evm_rms") << " | "
              << col(r, "ber_est") << " | " << col(r, "ber_direct") << " | " << col(r, "angular_rmse_deg") << " | "
              << col(r, "noise_floor_s1_db") << " | " << col(r, "noise_floor_s2_db") << " | "
              << col(r, "psd_peak_freq_s1") << " | " << col(r, "saturation_events") << " | "
              << col(r, "weighted_cost") << " |\n";
        }
        f << "\nQ threshold line: " << csv::fmt(threshold) << " dB.\n";
        for (const auto& r : summary.rows) {
            if (r[c_status] != "ok") f << "\nFailed: " << r[c_label] << ": " << r[summary.column("failure")] << "\n";
        }
    }
}

} // namespace sopfx::harness
