#include "sopfx/channel.hpp"

#include "sopfx/error.hpp"
#include "sopfx/rng.hpp"
#include "sopfx/sigproc.hpp"
#include "sopfx/sopsense.hpp"

#include <cmath>
#include <numbers>

namespace sopfx::channel {

namespace {

constexpr double pi = std::numbers::pi;

// Sub-seed streams; fixed so that each impairment draws from its own sequence.
enum Stream : std::uint64_t { kSymbols = 0, kPhaseNoise = 1, kAwgn = 2 };

double sps_of(const DualPolFrame& f) { return f.samples_per_symbol.value(); }

} // namespace

void ChannelConfig::validate() const {
    if (n_symbols < 1) throw ConfigError("channel.n_symbols must be >= 1");
    if (sps < 2) throw ConfigError("channel.sps must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("channel.rolloff must be in (0, 1]");
    if (rrc_span < 4) throw ConfigError("channel.rrc_span must be >= 4");
    if (!std::isfinite(snr_db)) throw ConfigError("channel.snr_db must be finite");
    if (!(linewidth_norm >= 0.0)) throw ConfigError("channel.linewidth_norm must be >= 0");
    if (!std::isfinite(cfo_norm)) throw ConfigError("channel.cfo_norm must be finite");
    if (!(vib_freq_norm > 0.0 && vib_freq_norm < 0.5 / sps)) {
        throw ConfigError("channel.vib_freq_norm must be in (0, 0.5/sps)");
    }
    if (!std::isfinite(vib_depth_rad)) throw ConfigError("channel.vib_depth_rad must be finite");
    const double n = std::sqrt(sop_axis[0] * sop_axis[0] + sop_axis[1] * sop_axis[1] + sop_axis[2] * sop_axis[2]);
    if (std::abs(n - 1.0) > 1e-9) throw ConfigError("channel.sop_axis must be unit-norm");
    if (truth_stride < 1) throw ConfigError("channel.truth_stride must be >= 1");
    if (skew_samples && !std::isfinite(*skew_samples)) throw ConfigError("channel.skew_samples must be finite");
}

cplx qpsk_map(int b0, int b1) {
    return cplx{1.0 - 2.0 * b0, 1.0 - 2.0 * b1} / std::numbers::sqrt2;
}

QpskSource gen_qpsk_symbols(std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("gen_qpsk_symbols: n must be >= 1");
    Rng rng(seed);
    QpskSource out;
    const auto count = static_cast<std::size_t>(n);
    out.bits_x.resize(2 * count);
    out.bits_y.resize(2 * count);
    out.symbols_x.resize(count);
    out.symbols_y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int x0 = rng.bit();
        const int x1 = rng.bit();
        const int y0 = rng.bit();
        const int y1 = rng.bit();
        out.bits_x[2 * i] = static_cast<std::uint8_t>(x0);
        out.bits_x[2 * i + 1] = static_cast<std::uint8_t>(x1);
        out.bits_y[2 * i] = static_cast<std::uint8_t>(y0);
        out.bits_y[2 * i + 1] = static_cast<std::uint8_t>(y1);
        out.symbols_x[i] = qpsk_map(x0, x1);
        out.symbols_y[i] = qpsk_map(y0, y1);
    }
    return out;
}

sop::JonesMatrix stokes_rotation(const std::array<double, 3>& a, double angle) {
    // exp(-i angle/2 a.sigma) with sigma1 = diag(1,-1), sigma2 = [[0,1],[1,0]],
    // sigma3 = [[0,-i],[i,0]].
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    const cplx j{0.0, 1.0};
    sop::JonesMatrix m;
    m(0, 0) = c - j * s * a[0];
    m(1, 1) = c + j * s * a[0];
    m(0, 1) = -j * s * cplx{a[1], -a[2]};
    m(1, 0) = -j * s * cplx{a[1], a[2]};
    return m;
}

sop::JonesMatrix static_jones(const std::array<double, 3>& e) {
    return stokes_rotation({0.0, 0.0, 1.0}, e[2]) * stokes_rotation({0.0, 1.0, 0.0}, e[1]) *
           stokes_rotation({1.0, 0.0, 0.0}, e[0]);
}

sop::JonesMatrix jones_at(const ChannelConfig& cfg, double t) {
    const double theta = cfg.vib_depth_rad * std::sin(2.0 * pi * cfg.vib_freq_norm * t);
    return static_jones(cfg.sop_static_rotation) * stokes_rotation(cfg.sop_axis, theta);
}

DualPolFrame apply_sop_rotation(const DualPolFrame& frame, const ChannelConfig& cfg) {
    frame.validate();
    DualPolFrame out = frame;
    const double sps = sps_of(frame);
    const sop::JonesMatrix js = static_jones(cfg.sop_static_rotation);
    for (std::size_t n = 0; n < frame.size(); ++n) {
        const double theta = cfg.vib_depth_rad * std::sin(2.0 * pi * cfg.vib_freq_norm * static_cast<double>(n) / sps);
        const sop::JonesMatrix j = js * stokes_rotation(cfg.sop_axis, theta);
        const sop::JonesVector v = j * sop::JonesVector{frame.x_pol[n], frame.y_pol[n]};
        out.x_pol[n] = v[0];
        out.y_pol[n] = v[1];
    }
    return out;
}

DualPolFrame apply_phase_noise(const DualPolFrame& frame, const ChannelConfig& cfg, std::uint64_t seed) {
    if (cfg.linewidth_norm < 0.0) throw ConfigError("apply_phase_noise: negative linewidth");
    frame.validate();
    if (cfg.linewidth_norm == 0.0) return frame;
    DualPolFrame out = frame;
    const double sigma = std::sqrt(2.0 * pi * cfg.linewidth_norm / sps_of(frame));
    Rng rng(seed);
    double phi = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
        phi += sigma * rng.normal();
        const cplx rot = std::polar(1.0, phi);
        out.x_pol[n] *= rot;
        out.y_pol[n] *= rot;
    }
    return out;
}

DualPolFrame apply_cfo(const DualPolFrame& frame, const ChannelConfig& cfg) {
    frame.validate();
    if (cfg.cfo_norm == 0.0) return frame;
    DualPolFrame out = frame;
    const double sps = sps_of(frame);
    for (std::size_t n = 0; n < frame.size(); ++n) {
        const double ph = 2.0 * pi * cfg.cfo_norm * static_cast<double>(n) / sps;
        const cplx rot = std::polar(1.0, std::fmod(ph, 2.0 * pi));
        out.x_pol[n] *= rot;
        out.y_pol[n] *= rot;
    }
    return out;
}

DualPolFrame apply_awgn(const DualPolFrame& frame, const ChannelConfig& cfg, std::uint64_t seed) {
    frame.validate();
    DualPolFrame out = frame;
    const std::size_t n = frame.size();
    if (n == 0) return out;
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i) p += std::norm(frame.x_pol[i]) + std::norm(frame.y_pol[i]);
    p /= 2.0 * static_cast<double>(n);
    const double noise_var = p / std::pow(10.0, cfg.snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.normal();
        const double b = rng.normal();
        const double c = rng.normal();
        const double d = rng.normal();
        out.x_pol[i] += sigma * cplx{a, b};
        out.y_pol[i] += sigma * cplx{c, d};
    }
    return out;
}

DualPolFrame apply_iq_imbalance(const DualPolFrame& frame, const ChannelConfig& cfg) {
    frame.validate();
    if (!cfg.iq_imbalance) return frame;
    const double g = std::pow(10.0, cfg.iq_imbalance->gain_db / 20.0);
    const double ph = cfg.iq_imbalance->phase_deg * pi / 180.0;
    DualPolFrame out = frame;
    auto distort = [&](CVec& v) {
        for (cplx& s : v) {
            const double i = s.real();
            const double q = s.imag();
            s = cplx{i, g * (q * std::cos(ph) - i * std::sin(ph))};
        }
    };
    distort(out.x_pol);
    distort(out.y_pol);
    return out;
}

DualPolFrame apply_skew(const DualPolFrame& frame, const ChannelConfig& cfg) {
    frame.validate();
    if (!cfg.skew_samples || *cfg.skew_samples == 0.0) return frame;
    DualPolFrame out = frame;
    auto skew = [&](CVec& v) {
        CVec q(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) q[i] = v[i].imag();
        const CVec d = dsp::fractional_delay(q, *cfg.skew_samples);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = cplx{v[i].real(), d[i].real()};
    };
    skew(out.x_pol);
    skew(out.y_pol);
    return out;
}

ChannelOutput run_channel(const ChannelConfig& cfg, sop::JonesVector probe) {
    cfg.validate();
    QpskSource src = gen_qpsk_symbols(cfg.n_symbols, derive_seed(cfg.seed, kSymbols));

    const auto sps = static_cast<std::size_t>(cfg.sps);
    const std::size_t n_samples = static_cast<std::size_t>(cfg.n_symbols) * sps;
    DualPolFrame frame;
    frame.samples_per_symbol = Rational(cfg.sps);
    frame.x_pol.assign(n_samples, cplx{});
    frame.y_pol.assign(n_samples, cplx{});
    for (std::size_t i = 0; i < src.symbols_x.size(); ++i) {
        frame.x_pol[i * sps] = src.symbols_x[i];
        frame.y_pol[i * sps] = src.symbols_y[i];
    }
    const RVec taps = dsp::rrc_taps(cfg.rolloff, cfg.rrc_span, cfg.sps);
    frame = dsp::fir_filter(frame, taps);
    frame = apply_sop_rotation(frame, cfg);
    frame = apply_cfo(frame, cfg);
    frame = apply_phase_noise(frame, cfg, derive_seed(cfg.seed, kPhaseNoise));
    frame = apply_iq_imbalance(frame, cfg);
    frame = apply_skew(frame, cfg);
    frame = apply_awgn(frame, cfg, derive_seed(cfg.seed, kAwgn));

    ChannelOutput out;
    out.frame = std::move(frame);
    GroundTruth& gt = out.truth;
    gt.tx_bits_x = std::move(src.bits_x);
    gt.tx_bits_y = std::move(src.bits_y);
    gt.tx_symbols_x = std::move(src.symbols_x);
    gt.tx_symbols_y = std::move(src.symbols_y);
    gt.stokes_of_t.sample_rate_norm = 1.0 / cfg.truth_stride;
    for (std::int64_t k = 0; k < cfg.n_symbols; k += cfg.truth_stride) {
        const sop::JonesMatrix j = jones_at(cfg, static_cast<double>(k));
        gt.truth_symbol_index.push_back(k);
        gt.jones_of_t.push_back(j);
        gt.stokes_of_t.samples.push_back(sop::probe_stokes(j.inverse(), probe));
    }
    return out;
}

} // namespace sopfx::channel
