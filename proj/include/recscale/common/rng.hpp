#pragma once

#include <cstdint>
#include <string_view>

namespace recscale {

// SplitMix64 (Steele, Lea, Flood 2014). The full seed -> stream mapping is
// documented in docs/sampling.md so that candidate sets can be reproduced by
// other implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). Draws below 2^64 mod n are rejected so that
    // the final modulo is unbiased. n must be positive.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next();
            if (x >= threshold) {
                return x % n;
            }
        }
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Child seed for a labelled sub-stream: first output of SplitMix64 seeded with
// base XOR fnv1a64(label).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    SplitMix64 g(base ^ fnv1a64(label));
    return g.next();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    SplitMix64 g(base ^ (index * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
    return g.next();
}

}  // namespace recscale
