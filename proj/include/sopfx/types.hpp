#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sopfx {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

/// Positive rational number, kept reduced.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
    bool operator==(const Rational&) const = default;
};

/// Dual-polarization complex baseband stream.
struct DualPolFrame {
    CVec x_pol;
    CVec y_pol;
    Rational samples_per_symbol{2};
    double symbol_rate_norm = 1.0;

    std::size_t size() const { return x_pol.size(); }
    /// Throws InvalidInput when the polarizations differ in length.
    void validate() const;
};

} // namespace sopfx
