#pragma once

#include <cstdint>
#include <random>

namespace epiforge {

/// Seeded RNG used for all parameter initialization.
///
/// Uniform draws are built directly from mt19937_64 output instead of
/// std::uniform_real_distribution, whose algorithm is implementation-defined.
/// This keeps parameter files byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace epiforge
