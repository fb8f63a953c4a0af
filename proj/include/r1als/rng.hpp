#pragma once

#include <cstdint>
#include <vector>

namespace r1als {

/// xorshift64* generator. Chosen over <random> engines because every
/// experiment must be bit-reproducible from its seed across standard
/// libraries, and the distribution adapters in <random> are not.
class Xorshift64Star {
public:
    explicit Xorshift64Star(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [-1, 1).
    double uniformSym() { return 2.0 * uniform01() - 1.0; }

    std::vector<double> uniformSymVector(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniformSym();
        return v;
    }

private:
    std::uint64_t state_;
};

} // namespace r1als
