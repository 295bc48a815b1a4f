#include "sopfx/sigproc.hpp"

#include "sopfx/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

namespace sopfx::dsp {

namespace {

constexpr double pi = std::numbers::pi;

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

CVec run_c2c(std::span<const cplx> in, int sign) {
    const int n = static_cast<int>(in.size());
    CVec out(in.size());
    if (n == 0) return out;
    CVec work(in.begin(), in.end());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(work.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(pi * x) / (pi * x);
}

RVec design_resampler(int p, int q, int& half_len) {
    const int m = std::max(p, q);
    half_len = 20 * m;
    const double beta = 9.0;
    const double fc = 0.5 / static_cast<double>(m);
    const std::size_t len = static_cast<std::size_t>(2 * half_len + 1);
    RVec h(len);
    const double i0b = std::cyl_bessel_i(0.0, beta);
    for (std::size_t k = 0; k < len; ++k) {
        const double r = (static_cast<double>(k) - half_len) / half_len;
        const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[k] = p * 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(k) - half_len)) * w;
    }
    return h;
}

} // namespace

double rrc_impulse(double t, double beta) {
    if (t == 0.0) return 1.0 - beta + 4.0 * beta / pi;
    const double x = 4.0 * beta * t;
    if (std::abs(std::abs(x) - 1.0) < 1e-10) {
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    return num / (pi * t * (1.0 - x * x));
}

RVec rrc_taps(double rolloff, int span_symbols, int sps) {
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("rrc_taps: rolloff must be in (0, 1]");
    if (span_symbols < 4) throw ConfigError("rrc_taps: span must be >= 4 symbols");
    if (sps < 2) throw ConfigError("rrc_taps: sps must be >= 2");
    const int len = span_symbols * sps + 1;
    const int center = len / 2;
    RVec h(static_cast<std::size_t>(len));
    for (int n = 0; n < len; ++n) {
        h[static_cast<std::size_t>(n)] = rrc_impulse(static_cast<double>(n - center) / sps, rolloff);
    }
    // Force exact symmetry, then unit energy.
    for (int n = 0; n < center; ++n) h[static_cast<std::size_t>(len - 1 - n)] = h[static_cast<std::size_t>(n)];
    const double energy = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
    const double g = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= g;
    return h;
}

CVec fir_filter(std::span<const cplx> in, std::span<const double> taps) {
    if (taps.empty()) throw InvalidInput("fir_filter: empty taps");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(taps.size());
    const std::ptrdiff_t c = (len - 1) / 2;
    CVec out(in.size());
    const double* src = reinterpret_cast<const double*>(in.data());
    double* dst = reinterpret_cast<double*>(out.data());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        // in index j = i + c - k must lie in [0, n)
        const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + c - (n - 1));
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(len - 1, i + c);
        double re = 0.0;
        double im = 0.0;
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
            const std::ptrdiff_t j = i + c - k;
            re += taps[static_cast<std::size_t>(k)] * src[2 * j];
            im += taps[static_cast<std::size_t>(k)] * src[2 * j + 1];
        }
        dst[2 * i] = re;
        dst[2 * i + 1] = im;
    }
    return out;
}

DualPolFrame fir_filter(const DualPolFrame& frame, std::span<const double> taps) {
    frame.validate();
    DualPolFrame out = frame;
    out.x_pol = fir_filter(frame.x_pol, taps);
    out.y_pol = fir_filter(frame.y_pol, taps);
    return out;
}

CVec resample_rational(std::span<const cplx> in, int p, int q) {
    if (p < 1 || q < 1) throw ConfigError("resample_rational: p and q must be >= 1");
    const int g = std::gcd(p, q);
    p /= g;
    q /= g;
    if (p == 1 && q == 1) return CVec(in.begin(), in.end());
    int half = 0;
    const RVec h = design_resampler(p, q, half);
    const std::int64_t n_in = static_cast<std::int64_t>(in.size());
    const std::int64_t n_out = (n_in * p + q - 1) / q;
    const std::int64_t hl = static_cast<std::int64_t>(h.size());
    CVec out(static_cast<std::size_t>(n_out));
    for (std::int64_t m = 0; m < n_out; ++m) {
        // upsampled index u = m*q; taps k = u + half - i*p, 0 <= k < hl
        const std::int64_t u = m * q + half;
        std::int64_t i_lo = (u - (hl - 1) + p - 1) / p;
        if (u - (hl - 1) < 0) i_lo = 0;
        i_lo = std::max<std::int64_t>(i_lo, 0);
        const std::int64_t i_hi = std::min<std::int64_t>(n_in - 1, u / p);
        cplx acc{0.0, 0.0};
        for (std::int64_t i = i_lo; i <= i_hi; ++i) {
            acc += h[static_cast<std::size_t>(u - i * p)] * in[static_cast<std::size_t>(i)];
        }
        out[static_cast<std::size_t>(m)] = acc;
    }
    return out;
}

DualPolFrame resample_rational(const DualPolFrame& frame, int p, int q) {
    frame.validate();
    DualPolFrame out;
    out.x_pol = resample_rational(frame.x_pol, p, q);
    out.y_pol = resample_rational(frame.y_pol, p, q);
    out.samples_per_symbol = frame.samples_per_symbol * Rational(p, q);
    out.symbol_rate_norm = frame.symbol_rate_norm;
    return out;
}

CVec fft(std::span<const cplx> in) { return run_c2c(in, FFTW_FORWARD); }

CVec ifft(std::span<const cplx> in) {
    CVec out = run_c2c(in, FFTW_BACKWARD);
    const double s = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
    for (cplx& v : out) v *= s;
    return out;
}

CVec fractional_delay(std::span<const cplx> in, double delay) {
    const std::size_t n = in.size();
    if (n == 0 || delay == 0.0) return CVec(in.begin(), in.end());
    CVec spec = fft(in);
    for (std::size_t k = 0; k < n; ++k) {
        double f = static_cast<double>(k) / static_cast<double>(n);
        if (f >= 0.5) f -= 1.0;
        if (n % 2 == 0 && k == n / 2) {
            // Nyquist bin: keep the response real so real inputs stay real.
            spec[k] *= std::cos(pi * delay);
            continue;
        }
        spec[k] *= std::polar(1.0, -2.0 * pi * f * delay);
    }
    return ifft(spec);
}

PsdEstimate welch_psd(std::span<const double> series, std::size_t segment_len, double overlap_frac, Window window) {
    if (segment_len < 2) throw ConfigError("welch_psd: segment length must be >= 2");
    if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) throw ConfigError("welch_psd: overlap must be in [0, 1)");
    if (series.size() < segment_len) {
        throw InvalidInput("welch_psd: series of length " + std::to_string(series.size()) +
                           " is shorter than one segment (" + std::to_string(segment_len) + ")");
    }
    const std::size_t nseg = segment_len;
    const std::size_t hop = std::max<std::size_t>(
        1, nseg - static_cast<std::size_t>(std::floor(static_cast<double>(nseg) * overlap_frac)));
    RVec w(nseg);
    for (std::size_t i = 0; i < nseg; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(nseg));
    }
    const double u = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    const std::size_t nfreq = nseg / 2 + 1;

    std::vector<double> buf(nseg);
    std::vector<cplx> spec(nfreq);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nseg), buf.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                    FFTW_ESTIMATE);
    }
    RVec acc(nfreq, 0.0);
    std::size_t count = 0;
    for (std::size_t start = 0; start + nseg <= series.size(); start += hop) {
        for (std::size_t i = 0; i < nseg; ++i) buf[i] = series[start + i] * w[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < nfreq; ++k) acc[k] += std::norm(spec[k]);
        ++count;
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    PsdEstimate out;
    out.segment_len = nseg;
    out.overlap = overlap_frac;
    out.window = window;
    out.segments = count;
    out.freqs.resize(nfreq);
    out.power.resize(nfreq);
    // Density with fs = 1: |X|^2 / (fs * U), doubled except at DC and Nyquist.
    const double scale = 1.0 / (u * static_cast<double>(count));
    for (std::size_t k = 0; k < nfreq; ++k) {
        const bool edge = (k == 0) || (nseg % 2 == 0 && k == nfreq - 1);
        out.freqs[k] = static_cast<double>(k) / static_cast<double>(nseg);
        out.power[k] = acc[k] * scale * (edge ? 1.0 : 2.0);
    }
    return out;
}

std::vector<Band> default_floor_exclusions(double tone_freq, double bin_width, int guard_bins, int harmonics) {
    const double g = guard_bins * bin_width;
    std::vector<Band> bands;
    bands.push_back({-1.0, g});
    for (int h = 1; h <= harmonics + 1; ++h) {
        bands.push_back({h * tone_freq - g, h * tone_freq + g});
    }
    return bands;
}

double noise_floor(const PsdEstimate& psd, std::span<const Band> exclude) {
    RVec kept;
    kept.reserve(psd.power.size());
    for (std::size_t k = 0; k < psd.power.size(); ++k) {
        const double f = psd.freqs[k];
        const bool excluded = std::any_of(exclude.begin(), exclude.end(),
                                          [f](const Band& b) { return f >= b.lo && f <= b.hi; });
        if (!excluded) kept.push_back(psd.power[k]);
    }
    if (kept.size() < 8) {
        throw InvalidInput("noise_floor: only " + std::to_string(kept.size()) + " bins remain after exclusion");
    }
    const std::size_t mid = kept.size() / 2;
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(mid), kept.end());
    if (kept.size() % 2 == 1) return kept[mid];
    const double upper = kept[mid];
    const double lower = *std::max_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::size_t peak_bin(const PsdEstimate& psd, double min_freq) {
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t k = 0; k < psd.power.size(); ++k) {
        if (psd.freqs[k] <= min_freq) continue;
        if (psd.power[k] > best_p) {
            best_p = psd.power[k];
            best = k;
        }
    }
    return best;
}

} // namespace sopfx::dsp
