#include "sopfx/rxdsp.hpp"

#include "sopfx/error.hpp"
#include "sopfx/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sopfx::rx {

namespace {

constexpr double pi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void gsop_rail(CVec& v) {
    const double n = static_cast<double>(v.size());
    double pi_ = 0.0;
    double pq = 0.0;
    double rho = 0.0;
    for (const cplx& s : v) {
        pi_ += s.real() * s.real();
        pq += s.imag() * s.imag();
        rho += s.real() * s.imag();
    }
    pi_ /= n;
    pq /= n;
    rho /= n;
    if (pi_ <= 0.0 || pq <= 0.0) throw InvalidInput("gsop_orthogonalize: zero-power rail");
    const double target = 0.5 * (pi_ + pq);
    const double k = rho / pi_;
    double po = 0.0;
    for (const cplx& s : v) {
        const double q = s.imag() - k * s.real();
        po += q * q;
    }
    po /= n;
    if (po <= 0.0) throw InvalidInput("gsop_orthogonalize: quadrature rail is collinear with in-phase rail");
    const double gi = std::sqrt(target / pi_);
    const double gq = std::sqrt(target / po);
    for (cplx& s : v) {
        const double q = s.imag() - k * s.real();
        s = cplx{s.real() * gi, q * gq};
    }
}

cplx pow4(cplx s) {
    const cplx s2 = s * s;
    return s2 * s2;
}

} // namespace

DualPolFrame gsop_orthogonalize(const DualPolFrame& frame) {
    frame.validate();
    if (frame.size() == 0) throw InvalidInput("gsop_orthogonalize: empty frame");
    DualPolFrame out = frame;
    gsop_rail(out.x_pol);
    gsop_rail(out.y_pol);
    return out;
}

CfoEstimate cfo_estimate(const DualPolFrame& frame) {
    frame.validate();
    const std::size_t n = frame.size();
    if (n < 64) throw InvalidInput("cfo_estimate: frame too short");
    const std::size_t nfft = next_pow2(n);
    CVec zx(nfft, cplx{});
    CVec zy(nfft, cplx{});
    for (std::size_t i = 0; i < n; ++i) {
        zx[i] = pow4(frame.x_pol[i]);
        zy[i] = pow4(frame.y_pol[i]);
    }
    const CVec fx_ = dsp::fft(zx);
    const CVec fy_ = dsp::fft(zy);
    RVec p(nfft);
    for (std::size_t k = 0; k < nfft; ++k) p[k] = std::norm(fx_[k]) + std::norm(fy_[k]);
    const auto kmax = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());

    const std::size_t guard = 16;
    double second = 0.0;
    for (std::size_t k = 0; k < nfft; ++k) {
        const std::size_t d = k > kmax ? k - kmax : kmax - k;
        const std::size_t circ = std::min(d, nfft - d);
        if (circ > guard) second = std::max(second, p[k]);
    }

    const double sps = frame.samples_per_symbol.value();
    double f = static_cast<double>(kmax) / static_cast<double>(nfft);
    if (f >= 0.5) f -= 1.0;
    CfoEstimate est;
    est.cfo_norm = f / 4.0 * sps;
    est.bin_width = sps / (4.0 * static_cast<double>(nfft));
    est.peak_ratio = second > 0.0 ? p[kmax] / second : INFINITY;
    est.low_confidence = est.peak_ratio < 2.0 || std::abs(est.cfo_norm) >= 0.125;
    return est;
}

DualPolFrame cfo_compensate(const DualPolFrame& frame, double cfo_norm) {
    frame.validate();
    DualPolFrame out = frame;
    const double sps = frame.samples_per_symbol.value();
    for (std::size_t n = 0; n < frame.size(); ++n) {
        const double ph = std::fmod(-2.0 * pi * cfo_norm * static_cast<double>(n) / sps, 2.0 * pi);
        const cplx rot = std::polar(1.0, ph);
        out.x_pol[n] *= rot;
        out.y_pol[n] *= rot;
    }
    return out;
}

DualPolFrame deskew(const DualPolFrame& frame, double skew_samples) {
    frame.validate();
    if (skew_samples == 0.0) return frame;
    DualPolFrame out = frame;
    auto fix = [&](CVec& v) {
        CVec q(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) q[i] = v[i].imag();
        const CVec d = dsp::fractional_delay(q, -skew_samples);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = cplx{v[i].real(), d[i].real()};
    };
    fix(out.x_pol);
    fix(out.y_pol);
    return out;
}

cplx cubic_interpolate(std::span<const cplx> x, double pos) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const double fl = std::floor(pos);
    const auto i = static_cast<std::ptrdiff_t>(fl);
    const double f = pos - fl;
    auto at = [&](std::ptrdiff_t k) { return x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n - 1))]; };
    const double cm1 = -f * (f - 1.0) * (f - 2.0) / 6.0;
    const double c0 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    const double c1 = -(f + 1.0) * f * (f - 2.0) / 2.0;
    const double c2 = (f + 1.0) * f * (f - 1.0) / 6.0;
    return cm1 * at(i - 1) + c0 * at(i) + c1 * at(i + 1) + c2 * at(i + 2);
}

GardnerResult gardner_timing(const DualPolFrame& frame, const GardnerConfig& cfg) {
    frame.validate();
    if (!(frame.samples_per_symbol == Rational(2))) throw ConfigError("gardner_timing: input must be 2 sa/sy");
    const std::size_t n = frame.size();
    if (n < 16) throw InvalidInput("gardner_timing: frame too short");

    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) power += std::norm(frame.x_pol[i]) + std::norm(frame.y_pol[i]);
    power /= static_cast<double>(n);
    if (power <= 0.0) throw InvalidInput("gardner_timing: zero-power input");

    GardnerResult res;
    res.frame.samples_per_symbol = Rational(1);
    res.frame.symbol_rate_norm = frame.symbol_rate_norm;
    const std::size_t reserve = n / 2 + 1;
    res.frame.x_pol.reserve(reserve);
    res.frame.y_pol.reserve(reserve);
    res.timing_samples.reserve(reserve);
    res.ted_error.reserve(reserve);

    double mu = 0.0;
    double integ = 0.0;
    cplx prev_x{};
    cplx prev_y{};
    for (std::size_t k = 0;; ++k) {
        const double tau = 2.0 * static_cast<double>(k) + mu;
        if (!std::isfinite(mu) || std::fabs(mu) > static_cast<double>(n) / 4.0) {
            throw DiagnosticError("gardner_timing: loop diverged (timing estimate left the frame)");
        }
        if (tau + 2.0 >= static_cast<double>(n)) break;
        const cplx yx = cubic_interpolate(frame.x_pol, tau);
        const cplx yy = cubic_interpolate(frame.y_pol, tau);
        double e = 0.0;
        if (k > 0) {
            const cplx mx = cubic_interpolate(frame.x_pol, tau - 1.0);
            const cplx my = cubic_interpolate(frame.y_pol, tau - 1.0);
            // Positive when the strobe is early.
            e = (std::real(std::conj(mx) * (prev_x - yx)) + std::real(std::conj(my) * (prev_y - yy))) / power;
            integ += cfg.ki * e;
            mu += cfg.kp * e + integ;
        }
        res.frame.x_pol.push_back(yx);
        res.frame.y_pol.push_back(yy);
        res.timing_samples.push_back(tau - 2.0 * static_cast<double>(k));
        res.ted_error.push_back(e);
        prev_x = yx;
        prev_y = yy;
    }

    const std::size_t m = res.ted_error.size();
    if (m >= 64) {
        auto var = [&](std::size_t a, std::size_t b) {
            double s = 0.0;
            double s2 = 0.0;
            for (std::size_t i = a; i < b; ++i) {
                s += res.ted_error[i];
                s2 += res.ted_error[i] * res.ted_error[i];
            }
            const double c = static_cast<double>(b - a);
            return s2 / c - (s / c) * (s / c);
        };
        const double v3 = var(m / 2, 3 * m / 4);
        const double v4 = var(3 * m / 4, m);
        if (!std::isfinite(v4) || v4 > 4.0 * v3 + 1e-12 || !std::isfinite(mu)) {
            throw DiagnosticError("gardner_timing: loop diverged (TED error variance grew over the final quarter)");
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

int EqConfig::mu_shift() const {
    int e = 0;
    const double m = std::frexp(mu_cma, &e);
    if (m != 0.5) return -1;
    return 1 - e;
}

void EqConfig::validate() const {
    if (n_taps < 1 || n_taps % 2 == 0) throw ConfigError("eq.n_taps must be odd and >= 1");
    if (!(mu_cma > 0.0) || !std::isfinite(mu_cma)) throw ConfigError("eq.mu_cma must be > 0");
    if (update_stride < 1) throw ConfigError("eq.update_stride must be >= 1");
    if (snapshot_stride < 0) throw ConfigError("eq.snapshot_stride must be >= 0");
    if (!std::isfinite(r2) || r2 <= 0.0) throw ConfigError("eq.r2 must be > 0");
    if (tap_guard_bits < 0) throw ConfigError("eq.tap_guard_bits must be >= 0");
    if (fixed() && arithmetic->total_bits() + tap_guard_bits > 32) {
        throw ConfigError("eq.tap_guard_bits: coefficient register wider than 32 bits");
    }
    if (fixed() && mu_shift() < 0) {
        throw ConfigError("eq.mu_cma must be a power of two 2^-m (m >= 0) in fixed-point mode");
    }
}

fx::FxFormat EqConfig::tap_register_format() const {
    if (!arithmetic) throw ConfigError("tap_register_format: float equalizer");
    return fx::FxFormat(arithmetic->total_bits() + tap_guard_bits, arithmetic->int_bits(), arithmetic->rounding());
}

TapSet EqState::taps() const {
    if (!cfg.fixed()) return h;
    TapSet out;
    for (std::size_t p = 0; p < 4; ++p) {
        out[p].resize(hq[p].size());
        for (std::size_t k = 0; k < hq[p].size(); ++k) {
            out[p][k] = cplx{fx::to_real(hq[p][k].re), fx::to_real(hq[p][k].im)};
        }
    }
    return out;
}

void EqState::set_taps(const TapSet& taps) {
    const auto nt = static_cast<std::size_t>(cfg.n_taps);
    for (const CVec& t : taps) {
        if (t.size() != nt) throw InvalidInput("EqState::set_taps: wrong tap count");
    }
    if (!cfg.fixed()) {
        h = taps;
        return;
    }
    const bool guarded = cfg.tap_guard_bits > 0;
    const fx::FxFormat reg = cfg.tap_register_format();
    for (std::size_t p = 0; p < 4; ++p) {
        hq[p].clear();
        hacc[p].clear();
        for (const cplx& c : taps[p]) {
            const fx::FxComplex v = fx::quantize(c.real(), c.imag(), reg, &saturation);
            if (guarded) hacc[p].push_back(v);
            hq[p].push_back(guarded ? fx::requantize(v, *cfg.arithmetic, &saturation) : v);
        }
    }
}

std::array<cplx, 4> EqState::dc_response() const {
    std::array<cplx, 4> out{};
    if (!cfg.fixed()) {
        for (std::size_t p = 0; p < 4; ++p) {
            for (const cplx& c : h[p]) out[p] += c;
        }
        return out;
    }
    for (std::size_t p = 0; p < 4; ++p) {
        for (const fx::FxComplex& c : hq[p]) out[p] += cplx{fx::to_real(c.re), fx::to_real(c.im)};
    }
    return out;
}

EqState cma_init(const EqConfig& cfg) {
    cfg.validate();
    EqState st;
    st.cfg = cfg;
    const auto nt = static_cast<std::size_t>(cfg.n_taps);
    const std::size_t c = nt / 2;
    if (cfg.fixed()) {
        const fx::FxFormat& fmt = *cfg.arithmetic;
        if (fmt.max_value() < 1.0) {
            throw ConfigError("cma_init: spike value 1.0 is not representable in " + fmt.to_string());
        }
        for (auto& row : st.hq) row.assign(nt, fx::FxComplex::zero(fmt));
        st.hq[kXX][c] = fx::quantize(1.0, 0.0, fmt);
        st.hq[kYY][c] = fx::quantize(1.0, 0.0, fmt);
        if (cfg.tap_guard_bits > 0) {
            const fx::FxFormat reg = cfg.tap_register_format();
            for (std::size_t p = 0; p < 4; ++p) {
                st.hacc[p].clear();
                for (const fx::FxComplex& v : st.hq[p]) st.hacc[p].push_back(fx::requantize(v, reg));
            }
        }
    } else {
        for (auto& row : st.h) row.assign(nt, cplx{});
        st.h[kXX][c] = 1.0;
        st.h[kYY][c] = 1.0;
    }
    return st;
}

namespace {

StepResult step_float(EqState& st, std::span<const cplx> xw, std::span<const cplx> yw, bool update) {
    const std::size_t nt = xw.size();
    TapSet& h = st.h;
    cplx ox{};
    cplx oy{};
    for (std::size_t k = 0; k < nt; ++k) {
        ox += h[kXX][k] * xw[k] + h[kXY][k] * yw[k];
        oy += h[kYX][k] * xw[k] + h[kYY][k] * yw[k];
    }
    StepResult r{ox, oy, update, 0.0, 0.0};
    if (update) {
        const double mu = st.cfg.mu_cma;
        r.err_x = st.cfg.r2 - std::norm(ox);
        r.err_y = st.cfg.r2 - std::norm(oy);
        const cplx gx = mu * r.err_x * ox;
        const cplx gy = mu * r.err_y * oy;
        for (std::size_t k = 0; k < nt; ++k) {
            const cplx cx = std::conj(xw[k]);
            const cplx cy = std::conj(yw[k]);
            h[kXX][k] += gx * cx;
            h[kXY][k] += gx * cy;
            h[kYX][k] += gy * cx;
            h[kYY][k] += gy * cy;
        }
    }
    return r;
}

StepResult step_fixed(EqState& st, std::span<const cplx> xw, std::span<const cplx> yw, bool update) {
    using namespace fx;
    const FxFormat& fmt = *st.cfg.arithmetic;
    SaturationCounter* sat = &st.saturation;
    const std::size_t nt = xw.size();
    thread_local std::vector<FxComplex> xq;
    thread_local std::vector<FxComplex> yq;
    xq.clear();
    yq.clear();
    for (std::size_t k = 0; k < nt; ++k) {
        xq.push_back(quantize(xw[k].real(), xw[k].imag(), fmt, sat));
        yq.push_back(quantize(yw[k].real(), yw[k].imag(), fmt, sat));
    }
    auto& h = st.hq;
    FxComplex ox = FxComplex::zero(fmt);
    FxComplex oy = FxComplex::zero(fmt);
    for (std::size_t k = 0; k < nt; ++k) {
        ox = fx_cmac(ox, h[kXX][k], xq[k], sat);
        ox = fx_cmac(ox, h[kXY][k], yq[k], sat);
        oy = fx_cmac(oy, h[kYX][k], xq[k], sat);
        oy = fx_cmac(oy, h[kYY][k], yq[k], sat);
    }
    StepResult r{cplx{to_real(ox.re), to_real(ox.im)}, cplx{to_real(oy.re), to_real(oy.im)}, update, 0.0, 0.0};
    if (update) {
        const FxValue r2 = quantize(st.cfg.r2, fmt, sat);
        auto err = [&](const FxComplex& o) {
            const FxValue p = fx_add(fx_mul(o.re, o.re, sat), fx_mul(o.im, o.im, sat), sat);
            return fx_sub(r2, p, sat);
        };
        const FxValue ex = err(ox);
        const FxValue ey = err(oy);
        r.err_x = to_real(ex);
        r.err_y = to_real(ey);
        const FxComplex gx{fx_mul(ex, ox.re, sat), fx_mul(ex, ox.im, sat)};
        const FxComplex gy{fx_mul(ey, oy.re, sat), fx_mul(ey, oy.im, sat)};
        const int shift = st.cfg.mu_shift();
        if (st.cfg.tap_guard_bits == 0) {
            for (std::size_t k = 0; k < nt; ++k) {
                const FxComplex cx = fx_conj(xq[k], sat);
                const FxComplex cy = fx_conj(yq[k], sat);
                h[kXX][k] = fx_cmac_shifted(h[kXX][k], gx, cx, shift, sat);
                h[kXY][k] = fx_cmac_shifted(h[kXY][k], gx, cy, shift, sat);
                h[kYX][k] = fx_cmac_shifted(h[kYX][k], gy, cx, shift, sat);
                h[kYY][k] = fx_cmac_shifted(h[kYY][k], gy, cy, shift, sat);
            }
        } else {
            const FxFormat reg = st.cfg.tap_register_format();
            const FxComplex gxw = requantize(gx, reg);
            const FxComplex gyw = requantize(gy, reg);
            auto& a = st.hacc;
            for (std::size_t k = 0; k < nt; ++k) {
                const FxComplex cx = requantize(fx_conj(xq[k], sat), reg);
                const FxComplex cy = requantize(fx_conj(yq[k], sat), reg);
                a[kXX][k] = fx_cmac_shifted(a[kXX][k], gxw, cx, shift, sat);
                a[kXY][k] = fx_cmac_shifted(a[kXY][k], gxw, cy, shift, sat);
                a[kYX][k] = fx_cmac_shifted(a[kYX][k], gyw, cx, shift, sat);
                a[kYY][k] = fx_cmac_shifted(a[kYY][k], gyw, cy, shift, sat);
                for (std::size_t p = 0; p < 4; ++p) h[p][k] = requantize(a[p][k], fmt, sat);
            }
        }
    }
    return r;
}

// Replaces the y row by the time-reversed orthogonal complement of the x row:
// h_yx[k] = -conj(h_xy[N-1-k]), h_yy[k] = conj(h_xx[N-1-k]).
void orthogonalize_y_row(EqState& st) {
    TapSet t = st.taps();
    const std::size_t nt = t[kXX].size();
    for (std::size_t k = 0; k < nt; ++k) {
        t[kYX][k] = -std::conj(t[kXY][nt - 1 - k]);
        t[kYY][k] = std::conj(t[kXX][nt - 1 - k]);
    }
    st.set_taps(t);
}

} // namespace

StepResult cma_step(EqState& state, std::span<const cplx> x_window, std::span<const cplx> y_window) {
    const auto nt = static_cast<std::size_t>(state.cfg.n_taps);
    if (x_window.size() != nt || y_window.size() != nt) throw InvalidInput("cma_step: window size != n_taps");
    const bool update = state.symbol_index % state.cfg.update_stride == 0;
    StepResult r = state.cfg.fixed() ? step_fixed(state, x_window, y_window, update)
                                     : step_float(state, x_window, y_window, update);
    ++state.symbol_index;
    return r;
}

CmaResult cma_run(const DualPolFrame& frame, const EqConfig& cfg, std::optional<EqState> initial) {
    cfg.validate();
    frame.validate();
    const std::size_t n = frame.size();
    const auto nt = static_cast<std::size_t>(cfg.n_taps);
    if (n <= 10 * nt) throw InvalidInput("cma_run: frame must be longer than 10 * n_taps");

    CmaResult res;
    EqState st = initial ? std::move(*initial) : cma_init(cfg);
    st.cfg = cfg;
    const auto snap = static_cast<std::size_t>(cfg.effective_snapshot_stride());
    res.trajectory.sop_sample_rate_norm = 1.0 / static_cast<double>(snap);
    res.trajectory.snapshots.reserve(n / snap + 1);
    res.symbols.samples_per_symbol = frame.samples_per_symbol;
    res.symbols.symbol_rate_norm = frame.symbol_rate_norm;
    res.symbols.x_pol.resize(n);
    res.symbols.y_pol.resize(n);

    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(nt / 2);
    std::vector<cplx> xw(nt);
    std::vector<cplx> yw(nt);
    const std::size_t tail_start = n - n / 10;
    double tail_err = 0.0;
    std::size_t tail_updates = 0;
    double tail_power = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < nt; ++k) {
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + c - static_cast<std::ptrdiff_t>(k);
            const bool ok = j >= 0 && j < static_cast<std::ptrdiff_t>(n);
            xw[k] = ok ? frame.x_pol[static_cast<std::size_t>(j)] : cplx{};
            yw[k] = ok ? frame.y_pol[static_cast<std::size_t>(j)] : cplx{};
        }
        const std::int64_t idx = st.symbol_index;
        const StepResult r = cma_step(st, xw, yw);
        res.symbols.x_pol[i] = r.out_x;
        res.symbols.y_pol[i] = r.out_y;
        if (i >= tail_start) {
            tail_power += 0.5 * (std::norm(r.out_x) + std::norm(r.out_y));
            if (r.updated) {
                tail_err += 0.5 * (std::abs(r.err_x) + std::abs(r.err_y));
                ++tail_updates;
            }
        }
        if (i % snap == 0) {
            const auto dc = st.dc_response();
            const cplx det = dc[kXX] * dc[kYY] - dc[kXY] * dc[kYX];
            if (std::abs(det) < kSingularityDet) {
                orthogonalize_y_row(st);
                ++res.diagnostics.singularity_resets;
            }
            res.trajectory.snapshots.push_back({idx, st.taps()});
        }
    }

    res.diagnostics.saturation_events = st.saturation.events;
    res.diagnostics.final_modulus_error = tail_updates ? tail_err / static_cast<double>(tail_updates) : 0.0;
    res.diagnostics.final_mean_power = tail_power / static_cast<double>(n - tail_start);
    res.final_state = std::move(st);
    if (!(res.diagnostics.final_modulus_error <= 0.5)) {
        throw DiagnosticError("cma_run: no convergence, mean |e| over final 10% = " +
                              std::to_string(res.diagnostics.final_modulus_error));
    }
    return res;
}

// ---------------------------------------------------------------------------

cplx qpsk_slice(cplx s) {
    constexpr double a = 1.0 / std::numbers::sqrt2;
    return {s.real() >= 0.0 ? a : -a, s.imag() >= 0.0 ? a : -a};
}

BpsResult bps_recover(std::span<const cplx> symbols, const BpsConfig& cfg) {
    if (cfg.n_test < 1 || cfg.block < 1) throw ConfigError("bps_recover: n_test and block must be >= 1");
    const std::size_t n = symbols.size();
    const auto nb = static_cast<std::size_t>(cfg.n_test);
    BpsResult res;
    res.symbols.resize(n);
    res.phase.resize(n);
    if (n == 0) return res;

    std::vector<cplx> rot(nb);
    std::vector<double> angle(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        angle[b] = -pi / 4.0 + static_cast<double>(b) * (pi / 2.0) / static_cast<double>(nb);
        rot[b] = std::polar(1.0, -angle[b]);
    }
    auto dist = [&](std::size_t j, std::size_t b) {
        const cplx z = symbols[j] * rot[b];
        return std::norm(z - qpsk_slice(z));
    };

    const auto half = static_cast<std::ptrdiff_t>(cfg.block / 2);
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    std::vector<double> sums(nb, 0.0);
    // Window for symbol k: [k - half, k - half + block - 1], clipped.
    std::ptrdiff_t lo = 0;
    std::ptrdiff_t hi = -1;
    double prev_phase = 0.0;
    for (std::ptrdiff_t k = 0; k <= last; ++k) {
        const std::ptrdiff_t want_lo = std::max<std::ptrdiff_t>(0, k - half);
        const std::ptrdiff_t want_hi = std::min<std::ptrdiff_t>(last, k - half + cfg.block - 1);
        while (hi < want_hi) {
            ++hi;
            for (std::size_t b = 0; b < nb; ++b) sums[b] += dist(static_cast<std::size_t>(hi), b);
        }
        while (lo < want_lo) {
            for (std::size_t b = 0; b < nb; ++b) sums[b] -= dist(static_cast<std::size_t>(lo), b);
            ++lo;
        }
        const auto best = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
        double ph = angle[best];
        if (k > 0) ph += (pi / 2.0) * std::round((prev_phase - ph) / (pi / 2.0));
        prev_phase = ph;
        res.phase[static_cast<std::size_t>(k)] = ph;
        res.symbols[static_cast<std::size_t>(k)] = symbols[static_cast<std::size_t>(k)] * std::polar(1.0, -ph);
    }
    return res;
}

DdLmsResult ddlms_run(const DualPolFrame& frame, double mu_dd) {
    frame.validate();
    if (!(mu_dd >= 0.0)) throw ConfigError("ddlms_run: mu_dd must be >= 0");
    const std::size_t n = frame.size();
    DdLmsResult res;
    res.symbols.samples_per_symbol = frame.samples_per_symbol;
    res.symbols.symbol_rate_norm = frame.symbol_rate_norm;
    res.symbols.x_pol.resize(n);
    res.symbols.y_pol.resize(n);
    std::array<cplx, 4> w{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}};
    const std::size_t tail_start = n - n / 10;
    double tail = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx x = frame.x_pol[i];
        const cplx y = frame.y_pol[i];
        const cplx ox = w[0] * x + w[1] * y;
        const cplx oy = w[2] * x + w[3] * y;
        const cplx ex = qpsk_slice(ox) - ox;
        const cplx ey = qpsk_slice(oy) - oy;
        if (mu_dd > 0.0) {
            w[0] += mu_dd * ex * std::conj(x);
            w[1] += mu_dd * ex * std::conj(y);
            w[2] += mu_dd * ey * std::conj(x);
            w[3] += mu_dd * ey * std::conj(y);
        }
        res.symbols.x_pol[i] = ox;
        res.symbols.y_pol[i] = oy;
        if (i >= tail_start) tail += 0.5 * (std::abs(ex) + std::abs(ey));
    }
    res.weights = w;
    res.final_error = n > tail_start ? tail / static_cast<double>(n - tail_start) : 0.0;
    if (!(res.final_error <= 0.5)) {
        throw DiagnosticError("ddlms_run: diverged, mean |e| over final 10% = " + std::to_string(res.final_error));
    }
    return res;
}

} // namespace sopfx::rx
