#include "sopfx/error.hpp"
#include "sopfx/rng.hpp"
#include "sopfx/types.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace sopfx {

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (n <= 0 || d <= 0) throw ConfigError("rational must be positive");
    const std::int64_t g = std::gcd(n, d);
    num = n / g;
    den = d / g;
}

void DualPolFrame::validate() const {
    if (x_pol.size() != y_pol.size()) {
        throw InvalidInput("dual-pol frame: polarization lengths differ (" + std::to_string(x_pol.size()) +
                           " vs " + std::to_string(y_pol.size()) + ")");
    }
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace sopfx
