#include "sopfx/metrics.hpp"

#include "sopfx/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sopfx::metrics {

namespace {

cplx transform(cplx s, int rotation, bool conjugate) {
    if (conjugate) s = std::conj(s);
    switch (rotation & 3) {
    case 1: return {-s.imag(), s.real()};
    case 2: return -s;
    case 3: return {s.imag(), -s.real()};
    default: return s;
    }
}

struct Candidate {
    std::int64_t errors = std::numeric_limits<std::int64_t>::max();
    std::int64_t bits = 0;
    int delay = 0;
    int rotation = 0;
    bool conjugated = false;
};

std::int64_t count_errors(std::span<const cplx> rx, std::span<const std::uint8_t> tx_bits, std::size_t begin,
                          std::size_t end, int delay, int rotation, bool conjugate, std::int64_t& bits) {
    const auto n_tx = static_cast<std::int64_t>(tx_bits.size() / 2);
    std::int64_t err = 0;
    bits = 0;
    for (std::size_t i = begin; i < end; ++i) {
        const std::int64_t t = static_cast<std::int64_t>(i) + delay;
        if (t < 0 || t >= n_tx) continue;
        const cplx s = transform(rx[i], rotation, conjugate);
        const int b0 = s.real() < 0.0 ? 1 : 0;
        const int b1 = s.imag() < 0.0 ? 1 : 0;
        err += (b0 != tx_bits[static_cast<std::size_t>(2 * t)]) + (b1 != tx_bits[static_cast<std::size_t>(2 * t + 1)]);
        bits += 2;
    }
    return err;
}

Candidate best_alignment(std::span<const cplx> rx, std::span<const std::uint8_t> tx_bits, std::size_t begin,
                         std::size_t end, int max_delay) {
    Candidate best;
    for (int d = -max_delay; d <= max_delay; ++d) {
        for (int c = 0; c < 2; ++c) {
            for (int r = 0; r < 4; ++r) {
                std::int64_t bits = 0;
                const std::int64_t e = count_errors(rx, tx_bits, begin, end, d, r, c == 1, bits);
                if (bits == 0) continue;
                // Compare error rates; bit counts differ slightly at the edges.
                if (best.bits == 0 || e * best.bits < best.errors * bits) {
                    best = {e, bits, d, r, c == 1};
                }
            }
        }
    }
    return best;
}

} // namespace

double evm_rms(std::span<const cplx> symbols) {
    if (symbols.empty()) throw InvalidInput("evm_rms: empty input");
    double err = 0.0;
    double ref = 0.0;
    for (const cplx& s : symbols) {
        const cplx d = rx::qpsk_slice(s);
        err += std::norm(s - d);
        ref += std::norm(d);
    }
    return std::sqrt(err / ref);
}

double evm_rms_data_aided(std::span<const cplx> symbols, std::span<const cplx> reference) {
    if (symbols.empty()) throw InvalidInput("evm_rms_data_aided: empty input");
    if (symbols.size() != reference.size()) throw InvalidInput("evm_rms_data_aided: length mismatch");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        err += std::norm(symbols[i] - reference[i]);
        ref += std::norm(reference[i]);
    }
    return std::sqrt(err / ref);
}

double ber_from_evm(double evm) {
    if (!(evm > 0.0)) return 0.0;
    return 0.5 * std::erfc(1.0 / (evm * std::numbers::sqrt2));
}

double erfc_inv(double y) {
    if (!(y > 0.0 && y < 2.0)) throw InvalidInput("erfc_inv: argument must be in (0, 2)");
    if (y == 1.0) return 0.0;
    if (y > 1.0) return -erfc_inv(2.0 - y);
    // Safeguarded Newton on g(x) = log(erfc(x)) - log(y) over x in [0, 27].
    const double target = std::log(y);
    double lo = 0.0;
    double hi = 27.0;
    double x = std::sqrt(std::max(0.0, -std::log(y * std::sqrt(std::numbers::pi) * 0.5 + 1e-300)));
    x = std::clamp(x, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double ec = std::erfc(x);
        const double g = std::log(ec) - target;
        if (g > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double dg = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x) / ec;
        double next = x - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

double qfactor_db(double ber) {
    if (!(ber > 0.0 && ber < 0.5)) throw InvalidInput("qfactor_db: BER must be in (0, 0.5)");
    return 20.0 * std::log10(std::numbers::sqrt2 * erfc_inv(2.0 * ber));
}

double ber_from_q_db(double q_db) {
    const double q = std::pow(10.0, q_db / 20.0);
    return 0.5 * std::erfc(q / std::numbers::sqrt2);
}

void qpsk_demap(cplx s, std::vector<std::uint8_t>& bits) {
    bits.push_back(s.real() < 0.0 ? 1 : 0);
    bits.push_back(s.imag() < 0.0 ? 1 : 0);
}

double ber_bits(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw InvalidInput("ber_bits: length mismatch");
    if (a.empty()) throw InvalidInput("ber_bits: empty input");
    std::int64_t e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] != b[i]);
    return static_cast<double>(e) / static_cast<double>(a.size());
}

BerDirect ber_direct(std::span<const cplx> rx_x, std::span<const cplx> rx_y, std::span<const std::uint8_t> tx_bits_x,
                     std::span<const std::uint8_t> tx_bits_y, const BerDirectOptions& opt) {
    if (rx_x.size() != rx_y.size()) throw InvalidInput("ber_direct: rx polarization lengths differ");
    if (tx_bits_x.size() != tx_bits_y.size() || tx_bits_x.size() % 2 != 0) {
        throw InvalidInput("ber_direct: tx bit sequences must have equal, even length");
    }
    if (rx_x.empty()) throw InvalidInput("ber_direct: empty input");
    const std::size_t n = rx_x.size();
    const std::size_t pb = std::min(n, static_cast<std::size_t>(opt.max_delay));
    const std::size_t pe = std::min(n, pb + opt.probe_symbols);

    const std::span<const cplx> rx[2] = {rx_x, rx_y};
    const std::span<const std::uint8_t> tx[2] = {tx_bits_x, tx_bits_y};
    Candidate probe[2][2];
    for (int r = 0; r < 2; ++r) {
        for (int t = 0; t < 2; ++t) probe[r][t] = best_alignment(rx[r], tx[t], pb, pe, opt.max_delay);
    }
    auto rate = [](const Candidate& c) { return c.bits ? static_cast<double>(c.errors) / c.bits : 1.0; };
    const double straight = rate(probe[0][0]) + rate(probe[1][1]);
    const double swapped = rate(probe[0][1]) + rate(probe[1][0]);

    BerDirect out;
    out.pol_swapped = swapped < straight;
    for (int r = 0; r < 2; ++r) {
        const int t = out.pol_swapped ? 1 - r : r;
        const Candidate& c = probe[r][t];
        if (rate(c) > opt.alignment_threshold) {
            throw DiagnosticError("ber_direct: alignment failure (best probe BER " + std::to_string(rate(c)) + ")");
        }
        std::int64_t bits = 0;
        out.errors += count_errors(rx[r], tx[t], 0, n, c.delay, c.rotation, c.conjugated, bits);
        out.bits += bits;
        out.delay[static_cast<std::size_t>(r)] = c.delay;
        out.rotation[static_cast<std::size_t>(r)] = c.rotation;
        out.conjugated[static_cast<std::size_t>(r)] = c.conjugated;
    }
    out.ber = out.bits ? static_cast<double>(out.errors) / static_cast<double>(out.bits) : 0.5;
    return out;
}

ComplexityReport complexity_report(const rx::EqConfig& cfg, int bit_width) {
    if (bit_width < 1) throw ConfigError("complexity_report: bit width must be >= 1");
    if (cfg.n_taps < 1 || cfg.update_stride < 1) throw ConfigError("complexity_report: invalid equalizer config");
    const double n = cfg.n_taps;
    ComplexityReport r;
    r.bit_width = bit_width;
    // Filter: 4 * n complex MACs per symbol pair; each is 4 real mults, 2 adds
    // for the product and 2 for accumulation.
    r.filter.real_mults = 4.0 * n * 4.0;
    r.filter.real_adds = 4.0 * n * 4.0;
    // Update, per event: per polarization |y|^2 (2 mults, 1 add), e = r2 - |y|^2
    // (1 add), e*y (2 mults); then 4n taps of e*y*conj(x) (4 mults, 2 adds)
    // plus the tap accumulation (2 adds). The step size is a shift.
    const double upd_mults = 2.0 * (2.0 + 2.0) + 4.0 * n * 4.0;
    const double upd_adds = 2.0 * (1.0 + 1.0) + 4.0 * n * (2.0 + 2.0);
    r.update.real_mults = upd_mults / cfg.update_stride;
    r.update.real_adds = upd_adds / cfg.update_stride;
    r.total.real_mults = r.filter.real_mults + r.update.real_mults;
    r.total.real_adds = r.filter.real_adds + r.update.real_adds;
    const double w = bit_width;
    r.add_cost = r.total.real_adds * w;
    r.mult_cost = r.total.real_mults * w * w;
    r.weighted_cost = r.add_cost + r.mult_cost;
    return r;
}

} // namespace sopfx::metrics
