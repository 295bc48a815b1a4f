#include "sopfx/fixnum.hpp"

#include "sopfx/error.hpp"

#include <charconv>
#include <cmath>

namespace sopfx::fx {

using wide = __int128;

struct Access {
    static FxValue make(const FxFormat& fmt, std::int64_t code) { return FxValue(fmt, code); }
};

namespace {

std::int64_t saturate(wide v, const FxFormat& fmt, SaturationCounter* sat) {
    if (v > fmt.max_code()) {
        if (sat) ++sat->events;
        return fmt.max_code();
    }
    if (v < fmt.min_code()) {
        if (sat) ++sat->events;
        return fmt.min_code();
    }
    return static_cast<std::int64_t>(v);
}

// Rounds v / 2^shift to an integer under the given rounding mode.
wide round_shift(wide v, int shift, Rounding mode) {
    if (shift == 0) return v;
    const wide one = wide{1} << shift;
    // Floor division for negative values as well.
    wide q = v >> shift;
    const wide rem = v - q * one;
    const wide twice = rem * 2;
    if (twice > one) {
        ++q;
    } else if (twice == one) {
        if (mode == Rounding::NearestTiesAway) {
            if (v >= 0) ++q;
        } else if ((q & 1) != 0) {
            ++q;
        }
    }
    return q;
}

FxValue make(wide v, int shift, const FxFormat& fmt, SaturationCounter* sat) {
    return Access::make(fmt, saturate(round_shift(v, shift, fmt.rounding()), fmt, sat));
}

void check_same(const FxFormat& a, const FxFormat& b) {
    if (!(a == b)) {
        throw ConfigError("fixed-point format mismatch: " + a.to_string() + " vs " + b.to_string());
    }
}

} // namespace

FxFormat::FxFormat(int total_bits, int int_bits, Rounding rounding)
    : total_bits_(total_bits), int_bits_(int_bits), rounding_(rounding) {
    if (total_bits < 4 || total_bits > 32) {
        throw ConfigError("fixed-point word width must be in [4, 32], got " + std::to_string(total_bits));
    }
    if (int_bits < 1 || int_bits >= total_bits) {
        throw ConfigError("fixed-point integer bits must be in [1, W), got " + std::to_string(int_bits));
    }
}

FxFormat FxFormat::parse(std::string_view text, Rounding rounding) {
    auto fail = [&] { return ConfigError("malformed fixed-point format '" + std::string(text) + "', expected Q<int>.<frac>"); };
    if (text.size() < 4 || (text[0] != 'Q' && text[0] != 'q')) throw fail();
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) throw fail();
    int ib = 0;
    int fb = 0;
    const char* b = text.data() + 1;
    const char* mid = text.data() + dot;
    const char* e = text.data() + text.size();
    auto r1 = std::from_chars(b, mid, ib);
    if (r1.ec != std::errc() || r1.ptr != mid) throw fail();
    auto r2 = std::from_chars(mid + 1, e, fb);
    if (r2.ec != std::errc() || r2.ptr != e || mid + 1 == e) throw fail();
    return FxFormat(ib + fb, ib, rounding);
}

double FxFormat::step() const { return std::ldexp(1.0, -frac_bits()); }
double FxFormat::min_value() const { return std::ldexp(static_cast<double>(min_code()), -frac_bits()); }
double FxFormat::max_value() const { return std::ldexp(static_cast<double>(max_code()), -frac_bits()); }

std::string FxFormat::to_string() const {
    return "Q" + std::to_string(int_bits_) + "." + std::to_string(frac_bits());
}

FxValue::FxValue(std::int64_t code, FxFormat fmt) : code_(code), fmt_(fmt) {
    if (code < fmt.min_code() || code > fmt.max_code()) {
        throw InvalidInput("code " + std::to_string(code) + " does not fit " + fmt.to_string());
    }
}

FxValue quantize(double x, const FxFormat& fmt, SaturationCounter* sat) {
    if (!std::isfinite(x)) throw InvalidInput("quantize: non-finite input");
    const double y = std::ldexp(x, fmt.frac_bits());
    const double hi = static_cast<double>(fmt.max_code());
    const double lo = static_cast<double>(fmt.min_code());
    if (y >= hi + 1.0) {
        if (sat) ++sat->events;
        return Access::make(fmt, fmt.max_code());
    }
    if (y <= lo - 1.0) {
        if (sat) ++sat->events;
        return Access::make(fmt, fmt.min_code());
    }
    double r = std::floor(y);
    const double frac = y - r;
    if (frac > 0.5) {
        r += 1.0;
    } else if (frac == 0.5) {
        if (fmt.rounding() == Rounding::NearestTiesAway) {
            if (y > 0) r += 1.0;
        } else if (std::fmod(r, 2.0) != 0.0) {
            r += 1.0;
        }
    }
    return Access::make(fmt, saturate(static_cast<wide>(r), fmt, sat));
}

FxComplex quantize(double re, double im, const FxFormat& fmt, SaturationCounter* sat) {
    return {quantize(re, fmt, sat), quantize(im, fmt, sat)};
}

double to_real(const FxValue& v) {
    return std::ldexp(static_cast<double>(v.code()), -v.format().frac_bits());
}

FxValue fx_add(const FxValue& a, const FxValue& b, SaturationCounter* sat) {
    check_same(a.format(), b.format());
    return make(wide{a.code()} + b.code(), 0, a.format(), sat);
}

FxValue fx_sub(const FxValue& a, const FxValue& b, SaturationCounter* sat) {
    check_same(a.format(), b.format());
    return make(wide{a.code()} - b.code(), 0, a.format(), sat);
}

FxValue fx_neg(const FxValue& a, SaturationCounter* sat) {
    return make(-wide{a.code()}, 0, a.format(), sat);
}

FxValue fx_mul(const FxValue& a, const FxValue& b, SaturationCounter* sat) {
    check_same(a.format(), b.format());
    return make(wide{a.code()} * b.code(), a.format().frac_bits(), a.format(), sat);
}

FxValue fx_shift_right(const FxValue& a, int shift, SaturationCounter* sat) {
    if (shift < 0 || shift > 64) throw ConfigError("fx_shift_right: shift out of range");
    return make(wide{a.code()}, shift, a.format(), sat);
}

FxComplex fx_add(const FxComplex& a, const FxComplex& b, SaturationCounter* sat) {
    return {fx_add(a.re, b.re, sat), fx_add(a.im, b.im, sat)};
}

FxComplex fx_conj(const FxComplex& a, SaturationCounter* sat) {
    return {a.re, fx_neg(a.im, sat)};
}

FxComplex fx_cmul(const FxComplex& a, const FxComplex& b, SaturationCounter* sat) {
    check_same(a.format(), b.format());
    const FxValue rr = fx_mul(a.re, b.re, sat);
    const FxValue ii = fx_mul(a.im, b.im, sat);
    const FxValue ri = fx_mul(a.re, b.im, sat);
    const FxValue ir = fx_mul(a.im, b.re, sat);
    return {fx_sub(rr, ii, sat), fx_add(ri, ir, sat)};
}

FxComplex fx_cmac_shifted(const FxComplex& acc, const FxComplex& a, const FxComplex& b, int shift,
                          SaturationCounter* sat) {
    check_same(acc.format(), a.format());
    check_same(a.format(), b.format());
    if (shift < 0 || shift > 60) throw ConfigError("fx_cmac_shifted: shift out of range");
    const FxFormat& fmt = acc.format();
    const int fb = fmt.frac_bits();
    // Products carry 2*fb fractional bits (plus the step-size shift); align the
    // accumulator to that scale so the whole sum is exact before rounding.
    const int total_shift = fb + shift;
    const wide pre = wide{a.re.code()} * b.re.code() - wide{a.im.code()} * b.im.code();
    const wide pim = wide{a.re.code()} * b.im.code() + wide{a.im.code()} * b.re.code();
    const wide re = (wide{acc.re.code()} << total_shift) + pre;
    const wide im = (wide{acc.im.code()} << total_shift) + pim;
    return {make(re, total_shift, fmt, sat), make(im, total_shift, fmt, sat)};
}

FxValue requantize(const FxValue& v, const FxFormat& fmt, SaturationCounter* sat) {
    const int delta = v.format().frac_bits() - fmt.frac_bits();
    if (delta >= 0) return make(wide{v.code()}, delta, fmt, sat);
    return make(wide{v.code()} << -delta, 0, fmt, sat);
}

FxComplex requantize(const FxComplex& v, const FxFormat& fmt, SaturationCounter* sat) {
    return {requantize(v.re, fmt, sat), requantize(v.im, fmt, sat)};
}

FxComplex fx_cmac(const FxComplex& acc, const FxComplex& a, const FxComplex& b, SaturationCounter* sat) {
    return fx_cmac_shifted(acc, a, b, 0, sat);
}

} // namespace sopfx::fx
