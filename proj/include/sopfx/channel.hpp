#pragma once

// Synthetic DP-QPSK transmitter and impairment channel. All rates are
// normalized to the symbol period.

#include "sopfx/polarization.hpp"
#include "sopfx/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sopfx::channel {

struct IqImbalance {
    double gain_db = 0.0;
    double phase_deg = 0.0;
};

struct ChannelConfig {
    std::int64_t n_symbols = std::int64_t{1} << 20;
    int sps = 2;
    double rolloff = 0.1;
    int rrc_span = 64;
    double snr_db = 15.0;
    double linewidth_norm = 1e-5;
    double cfo_norm = 1e-4;
    double vib_freq_norm = 0x1.0p-14;
    double vib_depth_rad = 0.5;
    std::array<double, 3> sop_axis{0.0, 0.6, 0.8};
    std::array<double, 3> sop_static_rotation{0.4, 0.9, -0.3};
    std::optional<IqImbalance> iq_imbalance;
    std::optional<double> skew_samples;
    /// Symbols between recorded ground-truth Jones matrices.
    int truth_stride = 2;
    std::uint64_t seed = 1;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

struct QpskSource {
    std::vector<std::uint8_t> bits_x; ///< 2 bits per symbol, b0 then b1
    std::vector<std::uint8_t> bits_y;
    CVec symbols_x;
    CVec symbols_y;
};

struct GroundTruth {
    std::vector<std::uint8_t> tx_bits_x;
    std::vector<std::uint8_t> tx_bits_y;
    CVec tx_symbols_x;
    CVec tx_symbols_y;
    std::vector<std::int64_t> truth_symbol_index;
    std::vector<sop::JonesMatrix> jones_of_t; ///< channel J(t), unitary
    sop::StokesTrajectory stokes_of_t;        ///< probe Stokes of J(t)^-1
};

/// Gray-mapped QPSK: bits (b0, b1) -> ((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2).
cplx qpsk_map(int b0, int b1);
QpskSource gen_qpsk_symbols(std::int64_t n, std::uint64_t seed);

/// Pauli-style generators matching the Stokes convention used by sop::jones_to_stokes.
sop::JonesMatrix stokes_rotation(const std::array<double, 3>& axis, double angle);
sop::JonesMatrix static_jones(const std::array<double, 3>& euler);

/// J(t) = J_static * exp(-i theta(t)/2 axis.sigma), theta(t) = depth * sin(2 pi f t), t in symbols.
sop::JonesMatrix jones_at(const ChannelConfig& cfg, double t_symbols);

DualPolFrame apply_sop_rotation(const DualPolFrame& frame, const ChannelConfig& cfg);
DualPolFrame apply_phase_noise(const DualPolFrame& frame, const ChannelConfig& cfg, std::uint64_t seed);
DualPolFrame apply_cfo(const DualPolFrame& frame, const ChannelConfig& cfg);
DualPolFrame apply_awgn(const DualPolFrame& frame, const ChannelConfig& cfg, std::uint64_t seed);
DualPolFrame apply_iq_imbalance(const DualPolFrame& frame, const ChannelConfig& cfg);
/// Delays the quadrature rail of both polarizations by skew_samples (FFT all-pass).
DualPolFrame apply_skew(const DualPolFrame& frame, const ChannelConfig& cfg);

struct ChannelOutput {
    DualPolFrame frame;
    GroundTruth truth;
};

/// gen -> RRC shaping -> SOP rotation -> CFO -> phase noise -> IQ/skew -> AWGN.
ChannelOutput run_channel(const ChannelConfig& cfg, sop::JonesVector probe = {cplx{1.0, 0.0}, cplx{0.0, 0.0}});

} // namespace sopfx::channel
