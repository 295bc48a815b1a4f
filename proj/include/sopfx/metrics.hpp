#pragma once

// Communication metrics (EVM, EVM-based BER estimate, Q-factor, direct bit
// error counting) and the analytic complexity model of the equalizer datapath.

#include "sopfx/rxdsp.hpp"
#include "sopfx/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sopfx::metrics {

struct CommReport {
    double evm_rms = 0.0;
    double ber_est = 0.0;
    std::optional<double> ber_direct;
    double q_db = 0.0;
    std::int64_t n_symbols_measured = 0;
};

/// Non-data-aided RMS EVM against the nearest unit-power QPSK point.
double evm_rms(std::span<const cplx> symbols);
/// Data-aided RMS EVM against known transmitted symbols.
double evm_rms_data_aided(std::span<const cplx> symbols, std::span<const cplx> reference);

/// 0.5 erfc(1 / (evm sqrt 2)); evm <= 0 gives 0.
double ber_from_evm(double evm);

/// Inverse of the complementary error function on (0, 2).
double erfc_inv(double y);

/// 20 log10(sqrt(2) erfcinv(2 ber)). Throws InvalidInput unless 0 < ber < 0.5.
double qfactor_db(double ber);
/// Inverse of qfactor_db.
double ber_from_q_db(double q_db);

struct BerDirectOptions {
    int max_delay = 16;
    /// Symbols used to pick the ambiguity / delay before the full count.
    std::size_t probe_symbols = 4096;
    /// Alignment fails when the best probe BER exceeds this; >= 0.5 disables.
    double alignment_threshold = 0.4;
};

struct BerDirect {
    double ber = 0.5;
    std::int64_t errors = 0;
    std::int64_t bits = 0;
    bool pol_swapped = false;
    std::array<int, 2> delay{};      ///< rx symbol i pairs with tx symbol i + delay
    std::array<int, 2> rotation{};   ///< multiples of pi/2 applied to rx
    std::array<bool, 2> conjugated{};
};

/// Hard-decision bit errors against transmitted bits, minimized over the 8
/// rotation/conjugation ambiguities per polarization, the polarization swap,
/// and a delay search. Throws DiagnosticError on alignment failure.
BerDirect ber_direct(std::span<const cplx> rx_x, std::span<const cplx> rx_y, std::span<const std::uint8_t> tx_bits_x,
                     std::span<const std::uint8_t> tx_bits_y, const BerDirectOptions& opt = {});

/// Bit error rate between two equal-length bit sequences.
double ber_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Gray demapping consistent with channel::qpsk_map; appends two bits.
void qpsk_demap(cplx s, std::vector<std::uint8_t>& bits);

struct OpCounts {
    double real_mults = 0.0;
    double real_adds = 0.0;
};

struct ComplexityReport {
    int bit_width = 0;
    OpCounts filter;  ///< per equalized symbol (both polarizations)
    OpCounts update;  ///< per equalized symbol, amortized over update_stride
    OpCounts total;
    double add_cost = 0.0;  ///< total adds * W
    double mult_cost = 0.0; ///< total mults * W^2
    double weighted_cost = 0.0;
};

/// Analytic operation count of the 2x2 CMA datapath. Weights model LUT-only
/// synthesis: an adder costs W, an array multiplier W^2.
ComplexityReport complexity_report(const rx::EqConfig& cfg, int bit_width);

} // namespace sopfx::metrics
