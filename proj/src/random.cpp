#include "vsfleet/random.hpp"

#include <bit>
#include <vector>

namespace vsfleet {

SeededStream::SeededStream(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(key.size() * 2);
    for (auto k : key) {
        words.push_back(static_cast<std::uint32_t>(k));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

std::uint64_t SeededStream::below(std::uint64_t bound) {
    // Rejection sampling on the top of the range keeps every residue equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t x = engine_();
    while (x > limit) x = engine_();
    return x % bound;
}

std::uint64_t bits_of(double value) noexcept { return std::bit_cast<std::uint64_t>(value); }

}  // namespace vsfleet
