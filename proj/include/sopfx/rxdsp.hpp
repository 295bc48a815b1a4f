#pragma once

// Receiver DSP chain: IQ orthogonalization, 4th-power frequency offset
// estimation, Gardner timing recovery, the float / fixed-point 2x2 CMA
// equalizer, blind phase search and DD-LMS refinement.

#include "sopfx/fixnum.hpp"
#include "sopfx/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sopfx::rx {

// ---------------------------------------------------------------------------
// Front end

/// Gram-Schmidt orthogonalization of the I/Q rails of each polarization. Output
/// rails have zero cross-correlation and equal power (their mean input power).
DualPolFrame gsop_orthogonalize(const DualPolFrame& frame);

struct CfoEstimate {
    double cfo_norm = 0.0;   ///< cycles per symbol
    double bin_width = 0.0;  ///< resolution, cycles per symbol
    double peak_ratio = 0.0; ///< main peak over strongest peak away from it
    bool low_confidence = false;
};

/// Argmax of |FFT(s^4)|^2 (summed over both polarizations), divided by 4.
/// Flags low confidence when the peak ratio is below 2 or |estimate| >= 1/8.
CfoEstimate cfo_estimate(const DualPolFrame& frame);

/// Multiplies by exp(-i 2 pi cfo_norm n / sps).
DualPolFrame cfo_compensate(const DualPolFrame& frame, double cfo_norm);

/// Removes a known quadrature-rail delay of `skew_samples` from both polarizations.
DualPolFrame deskew(const DualPolFrame& frame, double skew_samples);

struct GardnerConfig {
    double kp = 4e-3;
    double ki = 4e-6;
};

struct GardnerResult {
    DualPolFrame frame;  ///< 1 sa/sy
    RVec timing_samples; ///< loop timing estimate per output symbol, in input samples
    RVec ted_error;
};

/// Gardner TED with a proportional-integral loop and cubic Lagrange
/// interpolation; symbol k is taken at input position 2k + mu_k. Throws
/// DiagnosticError if the TED error variance grows over the final quarter.
GardnerResult gardner_timing(const DualPolFrame& frame, const GardnerConfig& cfg = {});

/// 4-point Lagrange interpolation of x at fractional index pos (clamped at edges).
cplx cubic_interpolate(std::span<const cplx> x, double pos);

// ---------------------------------------------------------------------------
// CMA equalizer

struct EqConfig {
    int n_taps = 5;
    double mu_cma = 0x1.0p-10;
    double r2 = 1.0;
    int update_stride = 2;
    /// nullopt: double-precision arithmetic.
    std::optional<fx::FxFormat> arithmetic;
    /// 0 selects update_stride.
    int snapshot_stride = 0;
    /// Extra fractional bits of the fixed-mode coefficient register. Updates
    /// accumulate at that precision; filtering reads the taps rounded back to
    /// `arithmetic`. 0 keeps a single format throughout.
    int tap_guard_bits = 0;

    int effective_snapshot_stride() const { return snapshot_stride > 0 ? snapshot_stride : update_stride; }
    bool fixed() const { return arithmetic.has_value(); }
    /// Format of the coefficient register (arithmetic widened by tap_guard_bits).
    fx::FxFormat tap_register_format() const;
    /// Step size as a right shift; only meaningful for power-of-two mu.
    int mu_shift() const;
    /// Throws ConfigError on invalid settings (fixed mode requires mu = 2^-m).
    void validate() const;
};

/// Coefficient order: xx, xy, yx, yy, where out_x = h_xx * x + h_xy * y.
enum TapIndex : std::size_t { kXX = 0, kXY = 1, kYX = 2, kYY = 3 };

using TapSet = std::array<CVec, 4>;

struct EqState {
    EqConfig cfg;
    TapSet h;                                          ///< float mode
    std::array<std::vector<fx::FxComplex>, 4> hq;      ///< fixed mode, filter view
    std::array<std::vector<fx::FxComplex>, 4> hacc;    ///< fixed mode with guard bits
    std::int64_t symbol_index = 0;
    fx::SaturationCounter saturation;

    /// Coefficients as complex doubles (exact code * step in fixed mode).
    TapSet taps() const;
    /// Overwrites all coefficients (quantized in fixed mode).
    void set_taps(const TapSet& taps);
    /// Sum over taps: the equalizer's DC frequency response.
    std::array<cplx, 4> dc_response() const;
};

struct StepResult {
    cplx out_x;
    cplx out_y;
    bool updated = false;
    double err_x = 0.0; ///< r2 - |out_x|^2 (only on update symbols)
    double err_y = 0.0;
};

/// Single-spike initialization: center taps of h_xx and h_yy are 1.
/// Throws ConfigError when 1.0 is not representable in the fixed format.
EqState cma_init(const EqConfig& cfg);

/// Filters one symbol. Windows hold n_taps samples, window[k] multiplies tap k.
/// On symbols with index = 0 (mod update_stride) applies
/// h_pq[k] += mu * e_p * out_p * conj(q[k]), e_p = r2 - |out_p|^2.
/// In fixed mode inputs are quantized and every arithmetic result is requantized.
StepResult cma_step(EqState& state, std::span<const cplx> x_window, std::span<const cplx> y_window);

struct TapSnapshot {
    std::int64_t symbol_index = 0;
    TapSet h;
};

struct TapTrajectory {
    std::vector<TapSnapshot> snapshots;
    double sop_sample_rate_norm = 0.5; ///< snapshots per symbol
};

struct CmaDiagnostics {
    std::uint64_t saturation_events = 0;
    std::uint64_t singularity_resets = 0;
    double final_modulus_error = 0.0; ///< mean |e| over the final 10% of updates
    double final_mean_power = 0.0;    ///< mean |out|^2 over the final 10% of symbols
};

struct CmaResult {
    DualPolFrame symbols;
    TapTrajectory trajectory;
    CmaDiagnostics diagnostics;
    EqState final_state;
};

/// Streams cma_step over a 1 sa/sy frame, snapshotting taps every
/// snapshot_stride symbols. When |det(dc_response)| < 0.1 the y row is
/// re-initialized to the time-reversed orthogonal complement of the x row.
/// Throws DiagnosticError when final_modulus_error exceeds 0.5.
CmaResult cma_run(const DualPolFrame& frame, const EqConfig& cfg, std::optional<EqState> initial = std::nullopt);

/// det(dc_response) threshold below which the singularity remedy is applied.
inline constexpr double kSingularityDet = 0.1;

// ---------------------------------------------------------------------------
// Carrier recovery and refinement

struct BpsConfig {
    int n_test = 32;
    int block = 64;
};

struct BpsResult {
    CVec symbols;
    RVec phase; ///< unwrapped phase estimate removed from each symbol
};

/// Blind phase search over n_test angles in [-pi/4, pi/4) with a centered
/// sliding window of `block` symbols and pi/2 cycle-slip unwrapping.
BpsResult bps_recover(std::span<const cplx> symbols, const BpsConfig& cfg = {});

/// Nearest point of the unit-power QPSK constellation.
cplx qpsk_slice(cplx s);

struct DdLmsResult {
    DualPolFrame symbols;
    std::array<cplx, 4> weights; ///< final xx, xy, yx, yy
    double final_error = 0.0;    ///< mean |e| over the final 10%
};

/// 2x2 single-tap decision-directed LMS from identity. Throws DiagnosticError
/// when the mean |e| over the final 10% exceeds 0.5.
DdLmsResult ddlms_run(const DualPolFrame& frame, double mu_dd = 1e-3);

} // namespace sopfx::rx
