#pragma once

// Signed saturating fixed-point arithmetic in Qm.n formats.
//
// A value is an integer code scaled by step = 2^-(total_bits - int_bits). The
// integer part includes the sign bit, so Q2.3 (W = 5) spans [-2, 2 - 0.125].
// Every operation computes its exact result at wide precision and then
// requantizes it once: round to nearest (ties per the format), then saturate.

#include <cstdint>
#include <string>
#include <string_view>

namespace sopfx::fx {

enum class Rounding { NearestTiesAway, NearestTiesEven };

class FxFormat {
public:
    /// Throws ConfigError unless 4 <= total_bits <= 32 and total_bits > int_bits >= 1.
    FxFormat(int total_bits, int int_bits = 2, Rounding rounding = Rounding::NearestTiesAway);

    /// Parses "Q<int>.<frac>", e.g. "Q2.5" is W = 7.
    static FxFormat parse(std::string_view text, Rounding rounding = Rounding::NearestTiesAway);

    int total_bits() const { return total_bits_; }
    int int_bits() const { return int_bits_; }
    int frac_bits() const { return total_bits_ - int_bits_; }
    Rounding rounding() const { return rounding_; }

    double step() const;
    double min_value() const;
    double max_value() const;
    std::int64_t min_code() const { return -(std::int64_t{1} << (total_bits_ - 1)); }
    std::int64_t max_code() const { return (std::int64_t{1} << (total_bits_ - 1)) - 1; }

    std::string to_string() const;

    bool operator==(const FxFormat&) const = default;

private:
    int total_bits_;
    int int_bits_;
    Rounding rounding_;
};

class FxValue {
public:
    /// Throws InvalidInput if code is outside the format's code range.
    FxValue(std::int64_t code, FxFormat fmt);

    static FxValue zero(FxFormat fmt) { return FxValue(fmt, 0); }

    std::int64_t code() const { return code_; }
    const FxFormat& format() const { return fmt_; }

    bool operator==(const FxValue&) const = default;

private:
    friend struct Access;
    FxValue(FxFormat fmt, std::int64_t code) : code_(code), fmt_(fmt) {}

    std::int64_t code_;
    FxFormat fmt_;
};

struct FxComplex {
    FxValue re;
    FxValue im;

    static FxComplex zero(FxFormat fmt) { return {FxValue::zero(fmt), FxValue::zero(fmt)}; }
    const FxFormat& format() const { return re.format(); }
    bool operator==(const FxComplex&) const = default;
};

/// Counts saturation events when passed to the arithmetic operations.
struct SaturationCounter {
    std::uint64_t events = 0;
};

/// Nearest code to x under the format's rounding mode; out-of-range inputs
/// saturate. Throws InvalidInput for non-finite x.
FxValue quantize(double x, const FxFormat& fmt, SaturationCounter* sat = nullptr);
FxComplex quantize(double re, double im, const FxFormat& fmt, SaturationCounter* sat = nullptr);

double to_real(const FxValue& v);

/// Converts to another format: exact when widening, one rounding otherwise.
FxValue requantize(const FxValue& v, const FxFormat& fmt, SaturationCounter* sat = nullptr);
FxComplex requantize(const FxComplex& v, const FxFormat& fmt, SaturationCounter* sat = nullptr);

// Binary operations throw ConfigError when operand formats differ.
FxValue fx_add(const FxValue& a, const FxValue& b, SaturationCounter* sat = nullptr);
FxValue fx_sub(const FxValue& a, const FxValue& b, SaturationCounter* sat = nullptr);
FxValue fx_neg(const FxValue& a, SaturationCounter* sat = nullptr);
FxValue fx_mul(const FxValue& a, const FxValue& b, SaturationCounter* sat = nullptr);

/// Multiplies by 2^-shift (shift >= 0): exact arithmetic shift, then rounding.
FxValue fx_shift_right(const FxValue& a, int shift, SaturationCounter* sat = nullptr);

FxComplex fx_add(const FxComplex& a, const FxComplex& b, SaturationCounter* sat = nullptr);
FxComplex fx_conj(const FxComplex& a, SaturationCounter* sat = nullptr);

/// Four real multiplies and two adds, each result requantized.
FxComplex fx_cmul(const FxComplex& a, const FxComplex& b, SaturationCounter* sat = nullptr);

/// acc + a*b per rail, the sum of products formed exactly and requantized once
/// (a multiply-accumulate unit with a single output rounding stage).
FxComplex fx_cmac(const FxComplex& acc, const FxComplex& a, const FxComplex& b,
                  SaturationCounter* sat = nullptr);

/// acc + 2^-shift * a*b per rail, formed exactly and requantized once. This is
/// the coefficient-update operator: a power-of-two step size is a wire shift.
FxComplex fx_cmac_shifted(const FxComplex& acc, const FxComplex& a, const FxComplex& b, int shift,
                          SaturationCounter* sat = nullptr);

} // namespace sopfx::fx
