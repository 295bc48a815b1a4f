#pragma once

// Dual-polarization signal primitives: pulse shaping, FIR filtering, rational
// resampling and Welch spectral estimation.

#include "sopfx/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace sopfx::dsp {

/// Root-raised-cosine impulse response, span_symbols * sps + 1 taps, unit energy.
RVec rrc_taps(double rolloff, int span_symbols, int sps);

/// Unnormalized closed-form RRC value at time t (in symbol periods).
double rrc_impulse(double t, double rolloff);

/// Linear convolution with "same" alignment: out[n] = sum_k taps[k] * in[n + (L-1)/2 - k].
CVec fir_filter(std::span<const cplx> in, std::span<const double> taps);
DualPolFrame fir_filter(const DualPolFrame& frame, std::span<const double> taps);

/// Polyphase rational rate change by p/q with a Kaiser-windowed sinc anti-alias
/// filter. Output length is ceil(len * p / q); sample m sits at input time m*q/p.
CVec resample_rational(std::span<const cplx> in, int p, int q);
DualPolFrame resample_rational(const DualPolFrame& frame, int p, int q);

// FFTW-backed transforms. The inverse is normalized by 1/N.
CVec fft(std::span<const cplx> in);
CVec ifft(std::span<const cplx> in);

/// Delays a whole sequence by `delay` samples (circular, FFT-domain all-pass).
CVec fractional_delay(std::span<const cplx> in, double delay);

enum class Window { Hann };

struct PsdEstimate {
    RVec freqs; ///< cycles per sample (normalized), 0 .. 0.5
    RVec power; ///< one-sided density, sum(power) * bin_width approximates mean square
    std::size_t segment_len = 0;
    double overlap = 0.0;
    Window window = Window::Hann;
    std::size_t segments = 0;

    double bin_width() const { return 1.0 / static_cast<double>(segment_len); }
};

/// Averaged modified periodograms (periodic Hann window, no detrending),
/// one-sided, density-scaled. Throws InvalidInput if the series is shorter
/// than one segment.
PsdEstimate welch_psd(std::span<const double> series, std::size_t segment_len, double overlap_frac = 0.5,
                      Window window = Window::Hann);

struct Band {
    double lo;
    double hi;
};

/// DC band plus the tone band and its first `harmonics` harmonics, each
/// `guard_bins` wide on either side.
std::vector<Band> default_floor_exclusions(double tone_freq, double bin_width, int guard_bins = 3,
                                           int harmonics = 3);

/// Median power over bins outside every excluded band. Throws InvalidInput
/// when fewer than 8 bins remain.
double noise_floor(const PsdEstimate& psd, std::span<const Band> exclude);

/// Index of the largest bin above `min_freq`.
std::size_t peak_bin(const PsdEstimate& psd, double min_freq);

} // namespace sopfx::dsp
