#pragma once

#include <cstdint>
#include <random>

namespace sopfx {

// std::normal_distribution is implementation-defined, so Gaussian draws are
// produced here from the raw mt19937_64 stream to keep runs bit-identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal();

    /// Single uniformly distributed bit.
    int bit() { return static_cast<int>(engine_() >> 63); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Deterministic sub-seed derivation (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace sopfx
