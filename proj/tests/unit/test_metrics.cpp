#include "awgn.hpp"

#include "sopfx/channel.hpp"
#include "sopfx/error.hpp"
#include "sopfx/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sopfx;
using namespace sopfx::metrics;

namespace {

CVec qpsk_points(std::size_t n, std::uint64_t seed) {
    const channel::QpskSource src = channel::gen_qpsk_symbols(static_cast<std::int64_t>(n), seed);
    return src.symbols_x;
}

} // namespace

TEST_CASE("evm examples") {
    const CVec clean = qpsk_points(1000, 1);
    CHECK(evm_rms(clean) < 1e-15);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
    CVec moved = clean;
    for (cplx& s : moved) s += std::polar(0.1, u(rng));
    CHECK(std::abs(evm_rms(moved) - 0.1) < 1e-12);
    CHECK(std::abs(evm_rms_data_aided(moved, clean) - 0.1) < 1e-12);

    CHECK_THROWS_AS(evm_rms(CVec{}), InvalidInput);
    CHECK_THROWS_AS(evm_rms_data_aided(clean, CVec(3)), InvalidInput);
}

TEST_CASE("evm at 20 dB snr") {
    const CVec clean = qpsk_points(200000, 2);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5 * 0.01));
    CVec noisy = clean;
    for (cplx& s : noisy) s += cplx{g(rng), g(rng)};
    const double e = evm_rms(noisy);
    CHECK(e > 0.095);
    CHECK(e < 0.105);
}

TEST_CASE("ber from evm") {
    // 0.5 erfc(sqrt 2) = Q(2).
    CHECK(std::abs(ber_from_evm(0.5) - 0.5 * std::erfc(std::sqrt(2.0))) < 1e-15);
    CHECK(std::abs(ber_from_evm(0.5) - 2.28e-2) < 5e-5);
    CHECK(ber_from_evm(0.0) == 0.0);
    CHECK(ber_from_evm(1e-3) < 1e-300);
    CHECK(ber_from_evm(10.0) > 0.46);
    CHECK(ber_from_evm(1e6) > 0.4999);
    // Es/N0 = 4 gives a data-aided evm of 0.5; counted bits agree within 1.5x.
    const oracle::AwgnLink l = oracle::awgn_link(10.0 * std::log10(4.0), 2'000'000, 9);
    CHECK(l.direct.ber > ber_from_evm(0.5) / 1.5);
    CHECK(l.direct.ber < ber_from_evm(0.5) * 1.5);
}

TEST_CASE("inverse erfc") {
    for (double y : {1e-300, 1e-100, 1e-20, 4.36e-5, 1e-3, 0.1, 0.5, 0.999, 1.0, 1.3, 1.9, 1.999999}) {
        const double x = erfc_inv(y);
        CHECK(std::abs(std::erfc(x) - y) <= 1e-13 * y);
    }
    CHECK_THROWS_AS(erfc_inv(0.0), InvalidInput);
    CHECK_THROWS_AS(erfc_inv(2.0), InvalidInput);
}

TEST_CASE("q factor examples") {
    // Independent value: 20 log10(-Phi^-1(2.18e-5)) = 12.229208 dB.
    CHECK(std::abs(qfactor_db(2.18e-5) - 12.229208103874324) < 1e-9);
    CHECK(std::abs(qfactor_db(2.18e-5) - 12.26) < 0.05);
    CHECK(std::abs(qfactor_db(0.5 * std::erfc(1.0 / std::sqrt(2.0)))) < 1e-12);
    CHECK_THROWS_AS(qfactor_db(0.0), InvalidInput);
    CHECK_THROWS_AS(qfactor_db(0.5), InvalidInput);
    CHECK_THROWS_AS(qfactor_db(-1.0), InvalidInput);
}

TEST_CASE("q factor round trip and monotonicity") {
    for (double q = -5.0; q <= 20.0; q += 0.25) {
        if (q == -5.0 || ber_from_q_db(q) <= 0.0) continue;
        CHECK(std::abs(qfactor_db(ber_from_q_db(q)) - q) < 1e-9);
    }
    double prev = INFINITY;
    for (double lb = -30.0; lb < std::log10(0.5) - 1e-3; lb += 0.01) {
        const double q = qfactor_db(std::pow(10.0, lb));
        CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("ber_direct examples") {
    const std::int64_t n = 500000;
    const channel::QpskSource src = channel::gen_qpsk_symbols(n, 6);
    const BerDirect same = ber_direct(src.symbols_x, src.symbols_y, src.bits_x, src.bits_y);
    CHECK(same.ber == 0.0);
    CHECK(same.bits == 2 * 2 * n);

    CVec x = src.symbols_x;
    x[1234] = std::conj(x[1234]);
    const BerDirect one = ber_direct(x, src.symbols_y, src.bits_x, src.bits_y);
    CHECK(one.errors == 1);
    CHECK(one.ber == 1.0 / static_cast<double>(4 * n));

    const channel::QpskSource other = channel::gen_qpsk_symbols(n, 77);
    BerDirectOptions loose;
    loose.alignment_threshold = 0.5;
    const BerDirect rnd = ber_direct(other.symbols_x, other.symbols_y, src.bits_x, src.bits_y, loose);
    CHECK(std::abs(rnd.ber - 0.5) < 0.01);
    CHECK_THROWS_AS(ber_direct(other.symbols_x, other.symbols_y, src.bits_x, src.bits_y), DiagnosticError);
}

TEST_CASE("ber_direct resolves rotation, conjugation, swap and delay") {
    const std::int64_t n = 20000;
    const channel::QpskSource src = channel::gen_qpsk_symbols(n, 12);
    const int d = 3;
    CVec rx(src.symbols_y.begin() + d, src.symbols_y.end());
    CVec ry(src.symbols_x.begin() + d, src.symbols_x.end());
    // rx carries conj(tx_y) * i; ry carries tx_x * -1.
    for (cplx& s : rx) s = std::conj(s) * cplx{0.0, 1.0};
    for (cplx& s : ry) s = -s;
    const BerDirect r = ber_direct(rx, ry, src.bits_x, src.bits_y);
    CHECK(r.ber == 0.0);
    CHECK(r.pol_swapped);
    CHECK(r.delay[0] == d);
    CHECK(r.delay[1] == d);
    CHECK(r.conjugated[0]);
    CHECK_FALSE(r.conjugated[1]);
    CHECK(r.rotation[1] == 2);
    CHECK(r.bits == 2 * 2 * (n - d));
}

TEST_CASE("qpsk demap inverts the channel map") {
    std::vector<std::uint8_t> bits;
    for (int b0 = 0; b0 < 2; ++b0) {
        for (int b1 = 0; b1 < 2; ++b1) {
            bits.clear();
            qpsk_demap(channel::qpsk_map(b0, b1), bits);
            CHECK(bits == std::vector<std::uint8_t>{static_cast<std::uint8_t>(b0), static_cast<std::uint8_t>(b1)});
        }
    }
    CHECK(ber_bits(std::vector<std::uint8_t>{0, 1, 1, 0}, std::vector<std::uint8_t>{0, 1, 0, 0}) == 0.25);
    CHECK_THROWS_AS(ber_bits(std::vector<std::uint8_t>{0}, std::vector<std::uint8_t>{}), InvalidInput);
}

TEST_CASE("evm-based ber tracks counted ber on awgn") {
    for (double snr : {6.0, 8.0, 10.0}) {
        const oracle::AwgnLink l = oracle::awgn_link(snr, 2'000'000, 40 + static_cast<std::uint64_t>(snr));
        MESSAGE("snr ", snr, " dB: estimated ", l.ber_est, ", counted ", l.direct.ber);
        CHECK(l.ber_est < 2.0 * l.direct.ber);
        CHECK(l.ber_est > 0.5 * l.direct.ber);
    }
}

TEST_CASE("complexity model") {
    rx::EqConfig cfg;
    cfg.n_taps = 5;
    cfg.update_stride = 2;
    const ComplexityReport r = complexity_report(cfg, 8);
    CHECK(r.filter.real_mults == 80.0);
    CHECK(r.bit_width == 8);
    CHECK(r.total.real_mults > 0.0);
    CHECK(r.total.real_adds > 0.0);
    CHECK(complexity_report(cfg, 8).weighted_cost > complexity_report(cfg, 5).weighted_cost);

    rx::EqConfig every = cfg;
    every.update_stride = 1;
    rx::EqConfig fourth = cfg;
    fourth.update_stride = 4;
    const ComplexityReport r1 = complexity_report(every, 8);
    const ComplexityReport r4 = complexity_report(fourth, 8);
    CHECK(r1.update.real_mults == 2.0 * r.update.real_mults);
    CHECK(r4.update.real_mults == 0.5 * r.update.real_mults);
    CHECK(r1.update.real_adds == 4.0 * r4.update.real_adds);
    CHECK(r1.filter.real_mults == r4.filter.real_mults);

    double prev = 0.0;
    for (int w = 4; w <= 32; ++w) {
        const ComplexityReport c = complexity_report(cfg, w);
        CHECK(c.weighted_cost > prev);
        CHECK(c.add_cost == c.total.real_adds * w);
        CHECK(c.mult_cost == c.total.real_mults * w * w);
        prev = c.weighted_cost;
    }
    prev = 0.0;
    for (int taps = 1; taps <= 33; taps += 2) {
        rx::EqConfig t = cfg;
        t.n_taps = taps;
        const double c = complexity_report(t, 8).weighted_cost;
        CHECK(c > prev);
        prev = c;
    }
    CHECK_THROWS_AS(complexity_report(cfg, 0), ConfigError);
}
