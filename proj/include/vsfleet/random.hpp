#pragma once

// Seeded streams with implementation-independent output. std::mt19937_64 and
// std::seed_seq are fully specified by the standard; the standard
// distributions are not, so the mappings below are done by hand.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vsfleet {

class SeededStream {
public:
    explicit SeededStream(std::initializer_list<std::uint64_t> key);

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Unbiased integer in [0, bound); bound > 0.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

/// Bit pattern of a double, for mixing coordinates into stream keys.
std::uint64_t bits_of(double value) noexcept;

}  // namespace vsfleet
