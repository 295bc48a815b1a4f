#include "sopfx/channel.hpp"
#include "sopfx/error.hpp"
#include "sopfx/metrics.hpp"
#include "sopfx/rng.hpp"
#include "sopfx/sigproc.hpp"
#include "sopfx/sopsense.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sopfx;
using namespace sopfx::channel;

namespace {

constexpr double kPi = std::numbers::pi;

ChannelConfig clean(std::int64_t n = 4096) {
    ChannelConfig c;
    c.n_symbols = n;
    c.snr_db = 300.0;
    c.linewidth_norm = 0.0;
    c.cfo_norm = 0.0;
    c.vib_depth_rad = 0.0;
    c.sop_static_rotation = {0.0, 0.0, 0.0};
    return c;
}

DualPolFrame constant_frame(std::size_t n, Rational sps = Rational(2)) {
    DualPolFrame f;
    f.x_pol.assign(n, cplx{1.0});
    f.y_pol.assign(n, cplx{0.0, 1.0});
    f.samples_per_symbol = sps;
    return f;
}

// Matrix exponential exp(-i a/2 n.sigma) by its power series.
sop::JonesMatrix expm_series(const std::array<double, 3>& n, double a) {
    const cplx j{0.0, 1.0};
    sop::JonesMatrix g;
    g(0, 0) = n[0];
    g(1, 1) = -n[0];
    g(0, 1) = cplx{n[1], -n[2]};
    g(1, 0) = cplx{n[1], n[2]};
    g = g * (-j * a / 2.0);
    sop::JonesMatrix sum = sop::JonesMatrix::identity();
    sop::JonesMatrix term = sop::JonesMatrix::identity();
    for (int k = 1; k < 40; ++k) {
        term = term * g * (1.0 / k);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) sum(r, c) += term(r, c);
        }
    }
    return sum;
}

} // namespace

TEST_CASE("qpsk mapping and generator") {
    CHECK(std::abs(qpsk_map(0, 0) - cplx{1.0, 1.0} / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(qpsk_map(1, 0) - cplx{-1.0, 1.0} / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(qpsk_map(1, 1) - cplx{-1.0, -1.0} / std::sqrt(2.0)) < 1e-15);
    const QpskSource a = gen_qpsk_symbols(1000, 42);
    const QpskSource b = gen_qpsk_symbols(1000, 42);
    const QpskSource c = gen_qpsk_symbols(1000, 43);
    CHECK(a.symbols_x == b.symbols_x);
    CHECK(a.bits_y == b.bits_y);
    CHECK(a.bits_x != c.bits_x);
    REQUIRE(a.bits_x.size() == 2000);
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(std::abs(std::abs(a.symbols_x[i]) - 1.0) < 1e-15);
        CHECK(a.symbols_x[i] == qpsk_map(a.bits_x[2 * i], a.bits_x[2 * i + 1]));
        CHECK(a.symbols_y[i] == qpsk_map(a.bits_y[2 * i], a.bits_y[2 * i + 1]));
    }
    CHECK_THROWS_AS(gen_qpsk_symbols(0, 1), ConfigError);
}

TEST_CASE("stokes rotation matches the matrix exponential") {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        std::array<double, 3> n{rng.normal(), rng.normal(), rng.normal()};
        const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        for (double& v : n) v /= len;
        const double a = 4.0 * rng.uniform() - 2.0;
        const sop::JonesMatrix m = stokes_rotation(n, a);
        const sop::JonesMatrix e = expm_series(n, a);
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) CHECK(std::abs(m(r, c) - e(r, c)) < 1e-12);
        }
        CHECK(m.unitarity_error() < 1e-12);
    }
}

TEST_CASE("stokes rotation acts as a rotation on the sphere") {
    // Rotation about S3 by pi/2 takes the S1 pole to the S2 pole.
    const sop::JonesMatrix m = stokes_rotation({0.0, 0.0, 1.0}, kPi / 2);
    const sop::Vec3 s = sop::jones_to_stokes(m * sop::JonesVector{cplx{1.0}, cplx{0.0}});
    CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sop rotation examples") {
    ChannelConfig c = clean();
    c.sop_axis = {0.0, 0.0, 1.0};
    c.vib_depth_rad = kPi / 2;
    // theta(t) reaches depth at a quarter period.
    const sop::JonesMatrix j = jones_at(c, 0.25 / c.vib_freq_norm);
    const sop::JonesVector v = j * sop::JonesVector{cplx{1.0}, cplx{0.0}};
    CHECK(std::norm(v[0]) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::norm(v[1]) == doctest::Approx(0.5).epsilon(1e-12));

    ChannelConfig s = clean();
    s.sop_static_rotation = {0.4, 0.9, -0.3};
    const DualPolFrame in = constant_frame(64);
    const DualPolFrame out = apply_sop_rotation(in, s);
    const sop::JonesMatrix js = static_jones(s.sop_static_rotation);
    for (std::size_t n = 0; n < in.size(); ++n) {
        const sop::JonesVector ref = js * sop::JonesVector{in.x_pol[n], in.y_pol[n]};
        CHECK(std::abs(out.x_pol[n] - ref[0]) < 1e-14);
        CHECK(std::abs(out.y_pol[n] - ref[1]) < 1e-14);
    }
}

TEST_CASE("every J(t) is unitary with unit determinant modulus") {
    ChannelConfig c;
    for (int k = 0; k < 2000; ++k) {
        const sop::JonesMatrix j = jones_at(c, 37.3 * k);
        CHECK(j.unitarity_error() < 1e-12);
        CHECK(std::abs(std::abs(j.det()) - 1.0) < 1e-12);
    }
}

TEST_CASE("phase noise increments") {
    ChannelConfig c = clean();
    c.linewidth_norm = 1e-4;
    const std::size_t n = 1000000;
    const DualPolFrame in = constant_frame(n);
    auto increments = [&](std::uint64_t seed) {
        const DualPolFrame out = apply_phase_noise(in, c, seed);
        RVec d(n - 1);
        for (std::size_t i = 1; i < n; ++i) d[i - 1] = std::arg(out.x_pol[i] / out.x_pol[i - 1]);
        return d;
    };
    const RVec a = increments(1);
    const RVec b = increments(2);
    double va = 0.0;
    double cab = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += a[i] * a[i];
        vb += b[i] * b[i];
        cab += a[i] * b[i];
    }
    const double m = static_cast<double>(a.size());
    CHECK(va / m == doctest::Approx(2 * kPi * 1e-4 / 2).epsilon(0.05));
    CHECK(std::fabs(cab / std::sqrt(va * vb)) < 3.0 / std::sqrt(m));

    ChannelConfig z = clean();
    CHECK(apply_phase_noise(in, z, 1).x_pol == in.x_pol);
    ChannelConfig neg = clean();
    neg.linewidth_norm = -1.0;
    CHECK_THROWS_AS(apply_phase_noise(in, neg, 1), ConfigError);
}

TEST_CASE("phase noise is common to both polarizations") {
    ChannelConfig c = clean();
    c.linewidth_norm = 1e-3;
    const DualPolFrame in = constant_frame(1000);
    const DualPolFrame out = apply_phase_noise(in, c, 3);
    for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(std::abs(out.y_pol[i] / out.x_pol[i] - cplx{0.0, 1.0}) < 1e-12);
    }
}

TEST_CASE("cfo, awgn, iq imbalance and skew") {
    const DualPolFrame in = constant_frame(1000);
    ChannelConfig c = clean();
    CHECK(apply_cfo(in, c).x_pol == in.x_pol);
    CHECK(apply_skew(in, c).x_pol == in.x_pol);
    c.skew_samples = 0.0;
    CHECK(apply_skew(in, c).y_pol == in.y_pol);
    CHECK(apply_iq_imbalance(in, c).x_pol == in.x_pol);

    c.cfo_norm = 0.01;
    const DualPolFrame f = apply_cfo(in, c);
    CHECK(std::abs(f.x_pol[100] - std::polar(1.0, 2 * kPi * 0.01 * 50)) < 1e-12);

    ChannelConfig iq = clean();
    iq.iq_imbalance = IqImbalance{1.0, 5.0};
    const DualPolFrame g = apply_iq_imbalance(in, iq);
    const double gain = std::pow(10.0, 1.0 / 20.0);
    // x = 1: Q rail picks up -g sin(phase) of the I rail.
    CHECK(g.x_pol[0].real() == 1.0);
    CHECK(g.x_pol[0].imag() == doctest::Approx(-gain * std::sin(5.0 * kPi / 180)).epsilon(1e-12));
    // y = i: Q rail scaled by g cos(phase).
    CHECK(g.y_pol[0].imag() == doctest::Approx(gain * std::cos(5.0 * kPi / 180)).epsilon(1e-12));
}

TEST_CASE("awgn at the configured snr") {
    ChannelConfig c = clean();
    c.snr_db = 10.0;
    Rng rng(1);
    DualPolFrame in;
    in.x_pol.resize(1000000);
    in.y_pol.resize(1000000);
    for (std::size_t i = 0; i < in.size(); ++i) {
        in.x_pol[i] = qpsk_map(rng.bit(), rng.bit());
        in.y_pol[i] = qpsk_map(rng.bit(), rng.bit());
    }
    const DualPolFrame out = apply_awgn(in, c, 5);
    double ps = 0.0;
    double pn = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        ps += std::norm(in.x_pol[i]) + std::norm(in.y_pol[i]);
        pn += std::norm(out.x_pol[i] - in.x_pol[i]) + std::norm(out.y_pol[i] - in.y_pol[i]);
    }
    CHECK(10 * std::log10(ps / pn) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("skew delays only the quadrature rail") {
    ChannelConfig c = clean();
    c.skew_samples = 1.0;
    DualPolFrame in;
    Rng rng(6);
    for (int i = 0; i < 64; ++i) {
        in.x_pol.push_back({rng.normal(), rng.normal()});
        in.y_pol.push_back({rng.normal(), rng.normal()});
    }
    const DualPolFrame out = apply_skew(in, c);
    for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(out.x_pol[i].real() == in.x_pol[i].real());
        CHECK(out.x_pol[(i + 1) % in.size()].imag() == doctest::Approx(in.x_pol[i].imag()).epsilon(1e-10));
    }
}

TEST_CASE("clean loopback through the matched filter") {
    const ChannelConfig c = clean(8192);
    const ChannelOutput out = run_channel(c);
    CHECK(out.frame.samples_per_symbol == Rational(2));
    CHECK(out.frame.size() == 16384);
    const DualPolFrame mf = dsp::fir_filter(out.frame, dsp::rrc_taps(c.rolloff, c.rrc_span, c.sps));
    CVec rx;
    CVec ref;
    for (std::size_t k = 64; k + 64 < 8192; ++k) {
        rx.push_back(mf.x_pol[2 * k]);
        ref.push_back(out.truth.tx_symbols_x[k]);
        rx.push_back(mf.y_pol[2 * k]);
        ref.push_back(out.truth.tx_symbols_y[k]);
    }
    CHECK(metrics::evm_rms_data_aided(rx, ref) < 0.01);
}

TEST_CASE("channel determinism and ground truth") {
    ChannelConfig c;
    c.n_symbols = 1 << 15;
    const ChannelOutput a = run_channel(c);
    const ChannelOutput b = run_channel(c);
    CHECK(a.frame.x_pol == b.frame.x_pol);
    CHECK(a.frame.y_pol == b.frame.y_pol);
    c.seed = 2;
    const ChannelOutput d = run_channel(c);
    CHECK(a.frame.x_pol != d.frame.x_pol);

    const auto& st = a.truth.stokes_of_t.samples;
    REQUIRE(st.size() == static_cast<std::size_t>(c.n_symbols / c.truth_stride));
    for (const auto& s : st) CHECK(std::fabs(sop::norm(s) - 1.0) < 1e-12);
    // One vibration period is 1 / vib_freq_norm symbols.
    const auto period = static_cast<std::size_t>(1.0 / c.vib_freq_norm) / static_cast<std::size_t>(c.truth_stride);
    for (std::size_t i = 0; i + period < st.size(); i += 97) {
        for (int k = 0; k < 3; ++k) CHECK(std::fabs(st[i][k] - st[i + period][k]) < 1e-9);
    }
    // Truth is the probe seen through J(t)^-1.
    for (std::size_t i = 0; i < st.size(); i += 501) {
        const sop::JonesMatrix j = a.truth.jones_of_t[i];
        const sop::Vec3 ref = sop::probe_stokes(j.inverse(), {cplx{1.0}, cplx{0.0}});
        for (int k = 0; k < 3; ++k) CHECK(std::fabs(st[i][k] - ref[k]) < 1e-12);
    }
}

TEST_CASE("channel config validation") {
    ChannelConfig c;
    c.vib_freq_norm = 0.3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ChannelConfig{};
    c.sop_axis = {1.0, 1.0, 0.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ChannelConfig{};
    c.snr_db = std::nan("");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ChannelConfig{};
    c.n_symbols = 0;
    CHECK_THROWS_AS(run_channel(c), ConfigError);
}
